use num_complex::Complex64;

use super::NetworkCase;

/// Two-port π-model admittances of one in-service branch, p.u.
#[derive(Debug, Clone, Copy)]
pub struct BranchAdmittance {
    /// Position in `NetworkCase::branches`.
    pub branch: usize,
    pub from: usize,
    pub to: usize,
    pub yff: Complex64,
    pub yft: Complex64,
    pub ytf: Complex64,
    pub ytt: Complex64,
}

/// Sparse complex bus admittance matrix in compressed-row form. Column
/// indices are sorted within each row.
#[derive(Debug, Clone)]
pub struct AdmittanceMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
    branches: Vec<BranchAdmittance>,
}

impl AdmittanceMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterate the stored entries of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[span.clone()].binary_search(&j) {
            Ok(k) => self.values[span.start + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let mut d = vec![vec![Complex64::new(0.0, 0.0); self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    /// y = Y·x
    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn branches(&self) -> &[BranchAdmittance] {
        &self.branches
    }
}

/// Assemble Y from the π-model of every in-service branch plus bus shunts.
pub fn build_admittance(case: &NetworkCase) -> AdmittanceMatrix {
    let n = case.n_buses();
    let base = case.base_mva;
    let mut triplets: Vec<(usize, usize, Complex64)> = Vec::new();
    let mut branches = Vec::new();

    for (i, bus) in case.buses.iter().enumerate() {
        // Always store the diagonal so the pattern is stable across cases.
        triplets.push((i, i, Complex64::new(bus.gs, bus.bs) / base));
    }
    for (k, br) in case.branches.iter().enumerate() {
        if !br.status.is_on() {
            continue;
        }
        let f = case.bus_index(br.from).expect("validated");
        let t = case.bus_index(br.to).expect("validated");
        let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
        let charging = Complex64::new(0.0, br.b / 2.0);
        let tap = Complex64::from_polar(br.tap, br.shift);
        let ytt = ys + charging;
        let yff = ytt / (tap * tap.conj());
        let yft = -ys / tap.conj();
        let ytf = -ys / tap;
        triplets.push((f, f, yff));
        triplets.push((f, t, yft));
        triplets.push((t, f, ytf));
        triplets.push((t, t, ytt));
        branches.push(BranchAdmittance {
            branch: k,
            from: f,
            to: t,
            yff,
            yft,
            ytf,
            ytt,
        });
    }

    triplets.sort_by_key(|&(i, j, _)| (i, j));
    let mut row_ptr = vec![0usize; n + 1];
    let mut col_idx = Vec::with_capacity(triplets.len());
    let mut values: Vec<Complex64> = Vec::with_capacity(triplets.len());
    let mut last: Option<(usize, usize)> = None;
    for (i, j, v) in triplets {
        if last == Some((i, j)) {
            *values.last_mut().expect("entry exists") += v;
        } else {
            col_idx.push(j);
            values.push(v);
            row_ptr[i + 1] += 1;
            last = Some((i, j));
        }
    }
    for i in 0..n {
        row_ptr[i + 1] += row_ptr[i];
    }
    AdmittanceMatrix {
        n,
        row_ptr,
        col_idx,
        values,
        branches,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::casedata::{parse_case, tests::TWO_BUS, Status};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_reactance_line() {
        let case = parse_case(TWO_BUS).unwrap();
        let y = build_admittance(&case).to_dense();
        let want = [[c(0.0, -10.0), c(0.0, 10.0)], [c(0.0, 10.0), c(0.0, -10.0)]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((y[i][j] - want[i][j]).norm() < 1e-12, "{i},{j}: {}", y[i][j]);
            }
        }
    }

    #[test]
    fn line_charging_adds_half_per_end() {
        let text = TWO_BUS.replace("1 2 0 0.1 0 0", "1 2 0 0.1 0.2 0");
        let case = parse_case(&text).unwrap();
        let y = build_admittance(&case);
        assert!((y.get(0, 0) - c(0.0, -9.9)).norm() < 1e-12);
        assert!((y.get(1, 1) - c(0.0, -9.9)).norm() < 1e-12);
        assert!((y.get(0, 1) - c(0.0, 10.0)).norm() < 1e-12);
    }

    #[test]
    fn off_branch_leaves_only_shunts() {
        let mut case = parse_case(TWO_BUS).unwrap();
        case.buses[1].bs = 19.0;
        case.branches[0].status = Status::Off;
        let y = build_admittance(&case);
        assert_eq!(y.get(0, 1), c(0.0, 0.0));
        assert_eq!(y.get(0, 0), c(0.0, 0.0));
        assert!((y.get(1, 1) - c(0.0, 0.19)).norm() < 1e-15);
        assert!(y.branches().is_empty());
    }

    #[test]
    fn tap_and_shift_follow_pi_model() {
        let text = TWO_BUS.replace("1 2 0 0.1 0 0 0 0 0 0", "1 2 0.01 0.1 0 0 0 0 0.95 5");
        let case = parse_case(&text).unwrap();
        let y = build_admittance(&case);
        let ys = c(1.0, 0.0) / c(0.01, 0.1);
        let t = Complex64::from_polar(0.95, 5f64.to_radians());
        assert!((y.get(0, 0) - ys / (0.95 * 0.95)).norm() < 1e-12);
        assert!((y.get(0, 1) + ys / t.conj()).norm() < 1e-12);
        assert!((y.get(1, 0) + ys / t).norm() < 1e-12);
        assert!((y.get(1, 1) - ys).norm() < 1e-12);
    }
}
