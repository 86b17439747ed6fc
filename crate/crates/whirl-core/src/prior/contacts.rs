//! Contact-label smoothing and interaction-window detection.

use crate::demo::ContactClass;
use crate::prior::savgol::{filter_mirrored, savgol_coefficients};
use crate::prior::{InteractionWindow, PriorError};

/// Smooth a discrete contact sequence: one-hot encode the four classes,
/// filter each channel, then re-discretize per frame by argmax with ties
/// broken toward the unfiltered class.
pub fn smooth_contacts(
    contacts: &[ContactClass],
    window: usize,
    polyorder: usize,
) -> Result<Vec<ContactClass>, PriorError> {
    let weights = savgol_coefficients(window, polyorder)?;
    if contacts.len() < window {
        return Err(PriorError::SequenceTooShort { len: contacts.len(), window });
    }

    let mut channels = vec![vec![0.0f64; contacts.len()]; ContactClass::COUNT];
    for (t, c) in contacts.iter().enumerate() {
        channels[c.index()][t] = 1.0;
    }
    let filtered: Vec<Vec<f64>> = channels.iter().map(|ch| filter_mirrored(ch, &weights)).collect();

    const TIE_EPS: f64 = 1e-12;
    Ok((0..contacts.len())
        .map(|t| {
            let mut best = 0usize;
            for ch in 1..ContactClass::COUNT {
                if filtered[ch][t] > filtered[best][t] {
                    best = ch;
                }
            }
            let original = contacts[t].index();
            if (filtered[original][t] - filtered[best][t]).abs() < TIE_EPS {
                best = original;
            }
            ContactClass::from_index(best).expect("channel index in range")
        })
        .collect())
}

/// Count adjacent class changes; used by the smoothing property tests.
pub fn count_transitions(contacts: &[ContactClass]) -> usize {
    contacts.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Find the interaction window: the longest contiguous run of identical
/// non-none contact, ties broken toward the earliest run; runs shorter than
/// `min_len` are ignored.
pub fn detect_window(
    smoothed: &[ContactClass],
    min_len: usize,
) -> Result<InteractionWindow, PriorError> {
    let mut best: Option<InteractionWindow> = None;
    let mut run_start = 0usize;
    let mut t = 0usize;
    while t <= smoothed.len() {
        let run_ends = t == smoothed.len() || smoothed[t] != smoothed[run_start];
        if run_ends {
            let class = smoothed[run_start];
            let len = t - run_start;
            if class.is_contact() && len >= min_len {
                let better = match &best {
                    None => true,
                    Some(b) => len > b.t_end - b.t_interaction + 1,
                };
                if better {
                    best = Some(InteractionWindow {
                        t_interaction: run_start,
                        t_end: t - 1,
                        segment_contact: class,
                    });
                }
            }
            run_start = t;
        }
        t += 1;
    }
    best.ok_or(PriorError::NoInteraction)
}
