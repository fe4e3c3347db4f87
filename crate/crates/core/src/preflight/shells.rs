use serde::Serialize;

/// Volumes sharing (approximately) one b-value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Shell {
    /// Rounded mean of the member b-values.
    pub b: f64,
    /// Volume indices, ascending.
    pub members: Vec<usize>,
}

pub const DEFAULT_SHELL_TOLERANCE: f64 = 50.0;

/// Single-linkage clustering of b-values: sorted values start a new shell
/// wherever the gap to the previous value exceeds `tol`.
pub fn shell_group(bvals: &[f64], tol: f64) -> Vec<Shell> {
    let mut order: Vec<usize> = (0..bvals.len()).collect();
    order.sort_by(|&a, &b| bvals[a].total_cmp(&bvals[b]).then(a.cmp(&b)));

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut last: Option<f64> = None;
    for idx in order {
        let b = bvals[idx];
        match (last, groups.last_mut()) {
            (Some(prev), Some(g)) if b - prev <= tol => g.push(idx),
            _ => groups.push(vec![idx]),
        }
        last = Some(b);
    }
    groups
        .into_iter()
        .map(|mut members| {
            members.sort_unstable();
            let mean = members.iter().map(|&i| bvals[i]).sum::<f64>() / members.len() as f64;
            Shell {
                b: mean.round_ties_even(),
                members,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_shells() {
        let s = shell_group(&[0.0, 5.0, 995.0, 1000.0, 1005.0, 2000.0], 50.0);
        let bs: Vec<f64> = s.iter().map(|x| x.b).collect();
        let sizes: Vec<usize> = s.iter().map(|x| x.members.len()).collect();
        assert_eq!(bs, vec![2.0, 1000.0, 2000.0]);
        assert_eq!(sizes, vec![2, 3, 1]);
    }

    #[test]
    fn trivial_cases() {
        assert_eq!(shell_group(&[0.0], 50.0).len(), 1);
        assert_eq!(shell_group(&[0.0, 1000.0], 50.0).len(), 2);
        assert!(shell_group(&[], 50.0).is_empty());
    }

    #[test]
    fn chain_links_transitively() {
        // 0-40-80: every gap is within tolerance even though the ends are not
        assert_eq!(shell_group(&[80.0, 0.0, 40.0], 50.0).len(), 1);
    }

    proptest! {
        #[test]
        fn partitions_indices(bvals in prop::collection::vec(0f64..3000.0, 1..60), tol in 1f64..200.0) {
            let shells = shell_group(&bvals, tol);
            let mut all: Vec<usize> = shells.iter().flat_map(|s| s.members.clone()).collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..bvals.len()).collect::<Vec<_>>());
            for w in shells.windows(2) {
                prop_assert!(w[0].b <= w[1].b);
            }
        }
    }
}
