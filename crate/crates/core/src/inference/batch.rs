use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::{ChatModel, Completion, InferenceError, Request};

/// Sends every request and returns results aligned with the input order.
///
/// At most `model.max_in_flight()` requests are outstanding. A failed item is
/// reported at its index and does not stop the rest of the batch.
pub fn complete_many(model: &dyn ChatModel, requests: &[Request]) -> Vec<Result<Completion, InferenceError>> {
    let n = requests.len();
    let slots: Vec<Mutex<Option<Result<Completion, InferenceError>>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = model.max_in_flight().max(1).min(n);
    let work = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        if i >= n {
            break;
        }
        let result = model.complete(&requests[i]).map(|mut c| {
            c.request_index = i;
            c
        });
        *slots[i].lock().unwrap() = Some(result);
    };
    if workers <= 1 {
        work();
    } else {
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(&work);
            }
        });
    }
    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("every slot is filled"))
        .collect()
}
