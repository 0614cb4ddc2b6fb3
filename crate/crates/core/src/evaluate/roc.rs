use crate::error::{Error, Result};

/// Reject-option post-processing. Inside the band `|score − 0.5| < theta`,
/// privileged rows get the unfavorable label and unprivileged rows the
/// favorable one; elsewhere the usual `score >= 0.5` threshold applies.
pub fn roc_postprocess(scores: &[f64], groups: &[u8], theta: f64) -> Result<Vec<u8>> {
    if !(theta > 0.0 && theta <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "theta must lie in (0, 0.5], got {theta}"
        )));
    }
    if scores.len() != groups.len() {
        return Err(Error::InvalidArgument("score and group lengths differ".into()));
    }
    Ok(scores
        .iter()
        .zip(groups)
        .map(|(&s, &g)| {
            if (s - 0.5).abs() < theta {
                1 - g
            } else {
                u8::from(s >= 0.5)
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_flips() {
        assert_eq!(roc_postprocess(&[0.55], &[1], 0.1).unwrap(), vec![0]);
        assert_eq!(roc_postprocess(&[0.45], &[0], 0.1).unwrap(), vec![1]);
        assert_eq!(roc_postprocess(&[0.45, 0.55], &[1, 0], 0.1).unwrap(), vec![0, 1]);
        assert_eq!(roc_postprocess(&[0.7, 0.2], &[1, 0], 0.1).unwrap(), vec![1, 0]);
    }

    #[test]
    fn tiny_band_is_plain_threshold() {
        // a score of exactly 0.5 sits inside every band, so it is left out
        let s = [0.1, 0.49, 0.500001, 0.51, 0.9];
        let g = [1, 0, 1, 0, 1];
        assert_eq!(roc_postprocess(&s, &g, 1e-12).unwrap(), vec![0, 0, 1, 1, 1]);
    }

    #[test]
    fn theta_range() {
        assert!(roc_postprocess(&[0.5], &[1], 0.0).is_err());
        assert!(roc_postprocess(&[0.5], &[1], 0.6).is_err());
    }
}
