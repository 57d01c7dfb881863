//! Deterministic low-discrepancy sampling used for construction-time checks
//! and validation grids.

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Radical-inverse (Halton) sequence member in base `base`, index `i >= 1`.
pub fn halton(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Rectangular sampling box in (t, x) used when a field is spot-checked.
#[derive(Clone, Debug)]
pub struct SampleDomain {
    pub t: (f64, f64),
    pub x: Vec<(f64, f64)>,
}

impl SampleDomain {
    pub fn new(t: (f64, f64), x: Vec<(f64, f64)>) -> Self {
        SampleDomain { t, x }
    }

    /// t in [0, 1], each x component in [-1, 1].
    pub fn unit(n: usize) -> Self {
        SampleDomain {
            t: (0.0, 1.0),
            x: vec![(-1.0, 1.0); n],
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// `count` Halton points spread over the box.
    pub fn points(&self, count: usize) -> Vec<(f64, Vec<f64>)> {
        assert!(
            self.x.len() < PRIMES.len(),
            "sample domain limited to {} spatial dimensions",
            PRIMES.len() - 1
        );
        (1..=count as u64)
            .map(|i| {
                let t = self.t.0 + (self.t.1 - self.t.0) * halton(i, PRIMES[0]);
                let x = self
                    .x
                    .iter()
                    .enumerate()
                    .map(|(k, &(lo, hi))| lo + (hi - lo) * halton(i, PRIMES[k + 1]))
                    .collect();
                (t, x)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_base2_prefix() {
        let expect = [0.5, 0.25, 0.75, 0.125, 0.625];
        for (i, e) in expect.iter().enumerate() {
            assert_eq!(halton(i as u64 + 1, 2), *e);
        }
    }

    #[test]
    fn points_stay_in_box() {
        let d = SampleDomain::new((1.0, 2.0), vec![(-3.0, -1.0), (0.0, 10.0)]);
        for (t, x) in d.points(64) {
            assert!((1.0..=2.0).contains(&t));
            assert!((-3.0..=-1.0).contains(&x[0]));
            assert!((0.0..=10.0).contains(&x[1]));
        }
    }
}
