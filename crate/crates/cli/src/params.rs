//! `--params` files.
//!
//! ```text
//! # static overrides, applied before the first frame
//! r_obs = 0.3
//! n_lim = 50000
//! # scheduled changes, applied before the given frame index
//! at frame 100 set d_inf = 5
//! at frame 150 set n_lim = 1000, r_obs = 0.1
//! ```

use anyhow::{bail, Context, Result};
use voxhash::ParamUpdate;

#[derive(Debug, Default, Clone, PartialEq)]
pub struct ParamsFile {
    /// `(name, value)` pairs in file order.
    pub fixed: Vec<(String, String)>,
    /// Changes keyed by frame index, in file order.
    pub schedule: Vec<(usize, ParamUpdate)>,
}

fn pair(s: &str) -> Result<(String, String)> {
    let (k, v) = s.split_once('=').with_context(|| format!("expected name = value in {s:?}"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

impl ParamsFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = ParamsFile::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let ctx = || format!("params line {}", i + 1);
            if let Some(rest) = line.strip_prefix("at frame") {
                let (frame, sets) = rest
                    .trim()
                    .split_once(" set ")
                    .with_context(|| format!("{}: expected `at frame N set name = value`", ctx()))?;
                let frame: usize = frame.trim().parse().with_context(ctx)?;
                let mut update = ParamUpdate::default();
                for item in sets.split(',') {
                    let (k, v) = pair(item).with_context(ctx)?;
                    if k == "res" || k == "origin" {
                        bail!("{}: {k} cannot change while mapping", ctx());
                    }
                    update.set(&k, &v).with_context(ctx)?;
                }
                out.schedule.push((frame, update));
            } else {
                let (k, v) = pair(line).with_context(ctx)?;
                // validate the name and value early
                ParamUpdate::default().set(&k, &v).with_context(ctx)?;
                out.fixed.push((k, v));
            }
        }
        Ok(out)
    }

    /// Updates due before `frame`, merged in file order.
    pub fn due(&self, frame: usize) -> Vec<&ParamUpdate> {
        self.schedule.iter().filter(|(f, _)| *f == frame).map(|(_, u)| u).collect()
    }
}
