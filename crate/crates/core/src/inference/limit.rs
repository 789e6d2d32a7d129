use std::sync::{Condvar, Mutex};

/// Counting gate bounding concurrent requests to one endpoint.
#[derive(Debug)]
pub struct InFlightLimit {
    max: usize,
    state: Mutex<(usize, usize)>,
    freed: Condvar,
}

pub struct Permit<'a> {
    limit: &'a InFlightLimit,
}

impl InFlightLimit {
    pub fn new(max: usize) -> Self {
        InFlightLimit {
            max: max.max(1),
            state: Mutex::new((0, 0)),
            freed: Condvar::new(),
        }
    }

    pub fn max(&self) -> usize {
        self.max
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut state = self.state.lock().unwrap();
        while state.0 >= self.max {
            state = self.freed.wait(state).unwrap();
        }
        state.0 += 1;
        state.1 = state.1.max(state.0);
        Permit { limit: self }
    }

    /// Highest number of simultaneously held permits so far.
    pub fn peak(&self) -> usize {
        self.state.lock().unwrap().1
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut state = self.limit.state.lock().unwrap();
        state.0 -= 1;
        self.limit.freed.notify_one();
    }
}
