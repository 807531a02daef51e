//! Doubly-linked recency list with stable slot handles.
//!
//! Nodes live in a slab; a [`HistSlot`] stays valid until that node is
//! erased, so holders can unlink themselves in O(1) without scanning.

const NIL: u32 = u32::MAX;

/// Position token of one entry in a [`HistoryList`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HistSlot(u32);

#[derive(Debug, Clone)]
struct Node<T> {
    prev: u32,
    next: u32,
    value: Option<T>,
}

#[derive(Debug, Clone)]
pub struct HistoryList<T> {
    nodes: Vec<Node<T>>,
    free: Vec<u32>,
    head: u32,
    tail: u32,
    len: usize,
}

impl<T> Default for HistoryList<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T> HistoryList<T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            free: Vec::new(),
            head: NIL,
            tail: NIL,
            len: 0,
        }
    }

    pub fn with_capacity(cap: usize) -> Self {
        let mut list = Self::new();
        list.nodes.reserve(cap);
        list
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push_back(&mut self, value: T) -> HistSlot {
        let node = Node {
            prev: self.tail,
            next: NIL,
            value: Some(value),
        };
        let idx = match self.free.pop() {
            Some(i) => {
                self.nodes[i as usize] = node;
                i
            }
            None => {
                self.nodes.push(node);
                u32::try_from(self.nodes.len() - 1).expect("history list exceeds u32 slots")
            }
        };
        if self.tail == NIL {
            self.head = idx;
        } else {
            self.nodes[self.tail as usize].next = idx;
        }
        self.tail = idx;
        self.len += 1;
        HistSlot(idx)
    }

    /// Unlinks the entry at `slot` and returns its value.
    ///
    /// Panics if the slot was already erased.
    pub fn erase(&mut self, slot: HistSlot) -> T {
        let idx = slot.0;
        let (prev, next, value) = {
            let n = &mut self.nodes[idx as usize];
            let value = n.value.take().expect("erase of a vacant history slot");
            (n.prev, n.next, value)
        };
        if prev == NIL {
            self.head = next;
        } else {
            self.nodes[prev as usize].next = next;
        }
        if next == NIL {
            self.tail = prev;
        } else {
            self.nodes[next as usize].prev = prev;
        }
        self.free.push(idx);
        self.len -= 1;
        value
    }

    pub fn pop_front(&mut self) -> Option<T> {
        if self.head == NIL {
            None
        } else {
            Some(self.erase(HistSlot(self.head)))
        }
    }

    pub fn front(&self) -> Option<&T> {
        self.get(HistSlot(self.head))
    }

    pub fn back(&self) -> Option<&T> {
        self.get(HistSlot(self.tail))
    }

    pub fn get(&self, slot: HistSlot) -> Option<&T> {
        self.nodes.get(slot.0 as usize).and_then(|n| n.value.as_ref())
    }

    /// Front (oldest) to back (newest).
    pub fn iter(&self) -> impl Iterator<Item = &T> + '_ {
        let mut cur = self.head;
        std::iter::from_fn(move || {
            if cur == NIL {
                return None;
            }
            let n = &self.nodes[cur as usize];
            cur = n.next;
            n.value.as_ref()
        })
    }

    pub fn clear(&mut self) {
        self.nodes.clear();
        self.free.clear();
        self.head = NIL;
        self.tail = NIL;
        self.len = 0;
    }
}
