use crate::error::{Error, Result};

/// Dynamic time warping distance with squared point cost and no window:
/// `D(i, j) = (a_i - b_j)^2 + min(D(i-1, j), D(i, j-1), D(i-1, j-1))`,
/// returning `sqrt(D(n, m))`.
pub fn dtw(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("dtw needs two non-empty series"));
    }
    let m = b.len();
    let mut prev = vec![0.0; m];
    let mut cur = vec![0.0; m];

    let mut acc = 0.0;
    for (j, &bj) in b.iter().enumerate() {
        let d = a[0] - bj;
        acc = if j == 0 { d * d } else { d * d + acc };
        prev[j] = acc;
    }
    for &ai in &a[1..] {
        let d = ai - b[0];
        cur[0] = d * d + prev[0];
        for j in 1..m {
            let d = ai - b[j];
            cur[j] = d * d + prev[j].min(cur[j - 1]).min(prev[j - 1]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m - 1].sqrt())
}
