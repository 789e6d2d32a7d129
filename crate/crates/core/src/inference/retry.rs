use std::time::Duration;

use rand::Rng;

use super::InferenceError;

/// 429 and every 5xx are transient; all other statuses are final.
pub fn is_retryable_status(status: u16) -> bool {
    status == 429 || (500..600).contains(&status)
}

/// Exponential backoff with up to 50% additive jitter.
pub fn backoff_delay(attempt: u32, base_ms: u64, max_ms: u64) -> Duration {
    let exp = base_ms.saturating_mul(1u64 << attempt.min(20)).min(max_ms);
    let jitter = if exp > 1 { rand::thread_rng().gen_range(0..=exp / 2) } else { 0 };
    Duration::from_millis(exp + jitter)
}

/// Runs `call` until it succeeds, fails permanently, or `max_retries` retries
/// have been spent. `call` receives the zero-based attempt number.
pub(crate) fn with_retries<T>(
    max_retries: u32,
    base_ms: u64,
    max_ms: u64,
    mut call: impl FnMut(u32) -> Result<T, InferenceError>,
) -> Result<T, InferenceError> {
    let mut attempt = 0;
    loop {
        match call(attempt) {
            Ok(v) => return Ok(v),
            Err(e) if e.is_retryable() && attempt < max_retries => {
                tracing::debug!(attempt, error = %e, "retrying request");
                let delay = backoff_delay(attempt, base_ms, max_ms);
                if !delay.is_zero() {
                    std::thread::sleep(delay);
                }
                attempt += 1;
            }
            Err(InferenceError::Transport { message, .. }) => {
                return Err(InferenceError::Transport {
                    message,
                    attempts: attempt + 1,
                })
            }
            Err(e) => return Err(e),
        }
    }
}
