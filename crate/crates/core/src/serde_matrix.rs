//! Complex matrices as `{"re": [[..]], "im": [[..]]}`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::kernel::{CMatrix, C64};

#[derive(Serialize, Deserialize)]
struct Parts {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
    let part = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
            .collect()
    };
    Parts {
        re: part(|z| z.re),
        im: part(|z| z.im),
    }
    .serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
    use serde::de::Error;
    let p = Parts::deserialize(d)?;
    let rows = p.re.len();
    let cols = p.re.first().map_or(0, Vec::len);
    let ragged = p.im.len() != rows || p.re.iter().chain(&p.im).any(|r| r.len() != cols);
    if ragged {
        return Err(D::Error::custom(
            "re/im parts must be rectangular and of equal shape",
        ));
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| {
        C64::new(p.re[i][j], p.im[i][j])
    }))
}
