use compreg::linops::{cyclic_shift, BlockGrid, Circulant, DegradationOperator, Dft2, Kernel};
use compreg::restore::shift_offsets;
use compreg::{Signal, SignalF32};
use nalgebra::{Complex, DMatrix};
use proptest::prelude::*;

/// Direct cyclic convolution with a center-anchored kernel.
fn naive_convolve(k: &Kernel<f64>, x: &Signal<f64>) -> Signal<f64> {
    let (h, w) = x.dims();
    let (kh, kw) = k.dims();
    let (ch, cw) = k.center();
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for a in 0..kh {
                for b in 0..kw {
                    let rr = (r + h * kh + ch - a) % h;
                    let cc = (c + w * kw + cw - b) % w;
                    acc += k.taps()[a * kw + b] * x.get(rr, cc);
                }
            }
            out[r * w + c] = acc;
        }
    }
    Signal::new(h, w, out).unwrap()
}

/// Column `j` is `H e_j`.
fn dense_matrix(op: &DegradationOperator<f64>) -> DMatrix<f64> {
    let (h, w) = op.dims();
    let n = h * w;
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = Signal::zeros(h, w);
        e.as_mut_slice()[j] = 1.0;
        let col = op.apply(&e).unwrap();
        for i in 0..n {
            m[(i, j)] = col.as_slice()[i];
        }
    }
    m
}

/// Unitary 2-D DFT matrix for a row-major `h × w` grid.
fn dft_matrix(h: usize, w: usize) -> DMatrix<Complex<f64>> {
    let n = h * w;
    let tau = 2.0 * std::f64::consts::PI;
    DMatrix::from_fn(n, n, |k, j| {
        let (k1, k2) = (k / w, k % w);
        let (j1, j2) = (j / w, j % w);
        let phase = -tau * ((k1 * j1) as f64 / h as f64 + (k2 * j2) as f64 / w as f64);
        Complex::from_polar(1.0 / (n as f64).sqrt(), phase)
    })
}

fn signal(h: usize, w: usize, v: Vec<f64>) -> Signal<f64> {
    Signal::new(h, w, v).unwrap()
}

fn kernel_strategy() -> impl Strategy<Value = Kernel<f64>> {
    (1usize..=4, 1usize..=4).prop_flat_map(|(kh, kw)| {
        prop::collection::vec(-1.0f64..1.0, kh * kw)
            .prop_map(move |t| Kernel::new(kh, kw, t).unwrap())
    })
}

fn image_strategy(h: usize, w: usize) -> impl Strategy<Value = Signal<f64>> {
    prop::collection::vec(-100.0f64..100.0, h * w).prop_map(move |v| signal(h, w, v))
}

#[test]
fn three_tap_impulse_response() {
    let k = Kernel::new(1, 3, vec![0.25, 0.5, 0.25]).unwrap();
    let op = DegradationOperator::convolution(k, (1, 4)).unwrap();
    let y = op.apply(&signal(1, 4, vec![1.0, 0.0, 0.0, 0.0])).unwrap();
    assert_eq!(y.as_slice(), &[0.5, 0.25, 0.0, 0.25]);
}

#[test]
fn symmetric_kernel_is_self_adjoint() {
    let k = Kernel::new(1, 3, vec![0.25, 0.5, 0.25]).unwrap();
    let op = DegradationOperator::convolution(k, (1, 16)).unwrap();
    let x = signal(1, 16, (0..16).map(|i| (i * i % 7) as f64).collect());
    let a = op.apply(&x).unwrap();
    let b = op.adjoint(&x).unwrap();
    for (p, q) in a.as_slice().iter().zip(b.as_slice()) {
        assert!((p - q).abs() < 1e-12);
    }
}

#[test]
fn spectrum_examples() {
    let id = DegradationOperator::<f64>::identity((4, 4)).unwrap();
    assert!(id
        .spectrum()
        .unwrap()
        .iter()
        .all(|h| (h - Complex::new(1.0, 0.0)).norm() < 1e-15));

    let two = DegradationOperator::convolution(Kernel::new(1, 2, vec![0.5, 0.5]).unwrap(), (1, 2))
        .unwrap();
    let s = two.spectrum().unwrap();
    assert!((s[0] - Complex::new(1.0, 0.0)).norm() < 1e-15);
    assert!(s[1].norm() < 1e-15);

    let uniform =
        DegradationOperator::<f64>::convolution(Kernel::uniform(9, 9).unwrap(), (64, 64)).unwrap();
    assert!((uniform.spectrum().unwrap()[0] - Complex::new(1.0, 0.0)).norm() < 1e-12);

    let mask = DegradationOperator::<f64>::mask((2, 2), vec![true; 4]).unwrap();
    assert!(mask.spectrum().is_err());
}

#[test]
fn diagonal_spectrum_pseudoinverse() {
    let spec = vec![
        Complex::new(2.0, 0.0),
        Complex::new(0.0, 0.0),
        Complex::new(-1.0, 0.0),
    ];
    // Not conjugate symmetric as a length-3 real operator unless mirrored entries agree.
    assert!(Circulant::from_spectrum((1, 3), spec.clone()).is_err());
    let pinv = compreg::linops::pseudoinverse_spectrum(&spec, 1e-12);
    assert_eq!(
        pinv,
        vec![
            Complex::new(0.5, 0.0),
            Complex::new(0.0, 0.0),
            Complex::new(-1.0, 0.0)
        ]
    );
    assert_eq!(compreg::linops::rank_of_spectrum(&spec, 1e-12), 2);
}

#[test]
fn identity_rank_and_pseudoinverse() {
    let id = DegradationOperator::<f64>::identity((8, 8)).unwrap();
    assert_eq!(id.rank_count(None), 64);
    let y = signal(8, 8, (0..64).map(|i| i as f64).collect());
    let p = id.pseudoinverse_filter(&y, None).unwrap();
    for (a, b) in p.as_slice().iter().zip(y.as_slice()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn pseudoinverse_inverts_invertible_blur() {
    let k = Kernel::new(3, 3, vec![0.05, 0.1, 0.05, 0.1, 0.4, 0.1, 0.05, 0.1, 0.05]).unwrap();
    let op = DegradationOperator::convolution(k, (8, 8)).unwrap();
    let x = signal(8, 8, (0..64).map(|i| ((i * 37) % 23) as f64).collect());
    let back = op
        .pseudoinverse_filter(&op.apply(&x).unwrap(), None)
        .unwrap();
    for (a, b) in back.as_slice().iter().zip(x.as_slice()) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn rank_matches_dense_svd() {
    // Uniform 9x9 on a 16x16 grid, and a 2x2 box that has exact spectral nulls.
    for (kh, kw) in [(9, 9), (2, 2), (1, 4)] {
        let op =
            DegradationOperator::<f64>::convolution(Kernel::uniform(kh, kw).unwrap(), (16, 16))
                .unwrap();
        let svd = dense_matrix(&op).svd(false, false);
        let peak = svd.singular_values.max();
        let dense_rank = svd
            .singular_values
            .iter()
            .filter(|&&s| s > 1e-8 * peak)
            .count();
        assert_eq!(op.rank_count(None), dense_rank, "{kh}x{kw}");
    }
}

#[test]
fn mask_pseudoinverse_and_rank() {
    let keep: Vec<bool> = (0..20).map(|i| i % 3 != 0).collect();
    let op = DegradationOperator::<f64>::mask((4, 5), keep.clone()).unwrap();
    assert_eq!(op.rank_count(None), keep.iter().filter(|&&k| k).count());
    let y = signal(4, 5, (1..=20).map(f64::from).collect());
    assert_eq!(
        op.pseudoinverse_filter(&y, None).unwrap(),
        op.apply(&y).unwrap()
    );
    let once = op.apply(&y).unwrap();
    assert_eq!(op.apply(&once).unwrap(), once);
}

#[test]
fn grid_examples() {
    let x = signal(16, 16, (0..256).map(f64::from).collect());
    let g = BlockGrid::new((8, 8), (0, 0), (16, 16)).unwrap();
    assert_eq!(g.block_count(), 4);
    let mut back = Signal::zeros(16, 16);
    for i in 0..4 {
        g.place_block(&mut back, i, &g.extract_block(&x, i).unwrap())
            .unwrap();
    }
    assert_eq!(back, x);

    let g = BlockGrid::new((8, 8), (3, 3), (16, 16)).unwrap();
    assert_eq!(g.crop_dims(), (13, 13));
    assert_eq!(g.block_count(), 4);
    let mut count = vec![0u32; 256];
    for r in g.rects() {
        for a in r.row..r.row + r.height {
            for b in r.col..r.col + r.width {
                count[a * 16 + b] += 1;
            }
        }
    }
    for (k, &c) in count.iter().enumerate() {
        let covered = k / 16 >= 3 && k % 16 >= 3;
        assert_eq!(c, u32::from(covered));
    }
    assert!(g.extract_block(&x, 4).is_err());

    let unit = BlockGrid::new((1, 1), (0, 0), (16, 16)).unwrap();
    assert_eq!(unit.extract_block(&x, 37).unwrap().as_slice(), &[37.0]);
}

#[test]
fn one_dimensional_shift() {
    let x = signal(1, 4, vec![1.0, 2.0, 3.0, 4.0]);
    let g = BlockGrid::new((1, 2), (0, 1), (1, 4)).unwrap();
    assert_eq!(g.shift(&x).unwrap().as_slice(), &[2.0, 3.0, 4.0]);
    assert_eq!(
        BlockGrid::new((1, 2), (0, 0), (1, 4))
            .unwrap()
            .shift(&x)
            .unwrap(),
        x
    );
    assert!(BlockGrid::new((1, 2), (0, 2), (1, 4)).is_err());
}

#[test]
fn dft_diagonalizes_small_circulant() {
    let k = Kernel::new(2, 3, vec![0.3, -0.2, 0.5, 0.1, 0.7, -0.4]).unwrap();
    let (h, w) = (4, 5);
    let op = DegradationOperator::convolution(k, (h, w)).unwrap();
    let hm = dense_matrix(&op).map(|v| Complex::new(v, 0.0));
    let f = dft_matrix(h, w);
    let d = &f * hm * f.adjoint();
    let spec = op.spectrum().unwrap();
    let peak = spec.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for i in 0..h * w {
        for j in 0..h * w {
            if i == j {
                assert!((d[(i, i)] - spec[i]).norm() < 1e-9 * peak);
            } else {
                assert!(d[(i, j)].norm() <= 1e-9 * peak);
            }
        }
    }
}

#[test]
fn f32_instantiation() {
    let k = Kernel::<f32>::uniform(3, 3).unwrap();
    let op = DegradationOperator::convolution(k, (8, 8)).unwrap();
    let x: SignalF32 = Signal::filled(8, 8, 2.0);
    let y = op.apply(&x).unwrap();
    assert!(y.as_slice().iter().all(|&v| (v - 2.0).abs() < 1e-5));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn apply_matches_direct_convolution(k in kernel_strategy(), x in image_strategy(5, 7)) {
        let op = DegradationOperator::convolution(k.clone(), (5, 7)).unwrap();
        let fast = op.apply(&x).unwrap();
        let slow = naive_convolve(&k, &x);
        for (a, b) in fast.as_slice().iter().zip(slow.as_slice()) {
            prop_assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn adjoint_identity_circulant(k in kernel_strategy(), x in image_strategy(16, 16), v in image_strategy(16, 16)) {
        let op = DegradationOperator::convolution(k, (16, 16)).unwrap();
        let lhs = op.apply(&x).unwrap().dot(&v).unwrap();
        let rhs = x.dot(&op.adjoint(&v).unwrap()).unwrap();
        let scale = op.apply(&x).unwrap().norm() * v.norm() + 1e-30;
        prop_assert!((lhs - rhs).abs() <= 1e-10 * scale);
    }

    #[test]
    fn adjoint_identity_mask(keep in prop::collection::vec(any::<bool>(), 64), x in image_strategy(8, 8), v in image_strategy(8, 8)) {
        let op = DegradationOperator::<f64>::mask((8, 8), keep).unwrap();
        prop_assert_eq!(op.apply(&x).unwrap().dot(&v).unwrap(), x.dot(&op.adjoint(&v).unwrap()).unwrap());
    }

    #[test]
    fn odd_kernel_adjoint_is_reversed_kernel(
        taps in prop::collection::vec(-1.0f64..1.0, 9),
        x in image_strategy(6, 6),
    ) {
        let k = Kernel::new(3, 3, taps).unwrap();
        let adj = DegradationOperator::convolution(k.clone(), (6, 6)).unwrap().adjoint(&x).unwrap();
        let rev = DegradationOperator::convolution(k.reversed(), (6, 6)).unwrap().apply(&x).unwrap();
        for (a, b) in adj.as_slice().iter().zip(rev.as_slice()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn pseudoinverse_identities(k in kernel_strategy(), x in image_strategy(8, 8)) {
        let op = DegradationOperator::convolution(k, (8, 8)).unwrap();
        let hx = op.apply(&x).unwrap();
        let scale = 1.0 + hx.norm();
        // H H⁺ H x = H x
        let hphx = op.apply(&op.pseudoinverse_filter(&hx, None).unwrap()).unwrap();
        prop_assert!(hphx.distance_sq(&hx).unwrap().sqrt() <= 1e-9 * scale);
        // H⁺ H H⁺ x = H⁺ x
        let px = op.pseudoinverse_filter(&x, None).unwrap();
        let php = op.pseudoinverse_filter(&op.apply(&px).unwrap(), None).unwrap();
        prop_assert!(php.distance_sq(&px).unwrap().sqrt() <= 1e-9 * (1.0 + px.norm()));
        // Hᵀ(I − HH⁺) x = 0
        let resid = x.sub(&op.range_projection(&x, None).unwrap()).unwrap();
        prop_assert!(op.adjoint(&resid).unwrap().norm() <= 1e-10 * (1.0 + x.norm()));
    }

    #[test]
    fn convolution_commutes_with_cyclic_shift(k in kernel_strategy(), x in image_strategy(6, 5), dy in 0usize..6, dx in 0usize..5) {
        let op = DegradationOperator::convolution(k, (6, 5)).unwrap();
        let a = op.apply(&cyclic_shift(&x, dy, dx)).unwrap();
        let b = cyclic_shift(&op.apply(&x).unwrap(), dy, dx);
        for (p, q) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn block_and_shift_round_trips_are_exact(
        h in 1usize..20,
        w in 1usize..20,
        bh in 1usize..9,
        bw in 1usize..9,
        seed in any::<u64>(),
    ) {
        let x = signal(h, w, (0..h * w).map(|i| ((i as u64 * 2654435761 + seed) % 256) as f64).collect());
        let oy = (seed as usize) % bh.min(h);
        let ox = (seed as usize / 7) % bw.min(w);
        let g = BlockGrid::new((bh, bw), (oy, ox), (h, w)).unwrap();
        let mut back = Signal::zeros(h, w);
        for i in 0..g.block_count() {
            g.place_block(&mut back, i, &g.extract_block(&x, i).unwrap()).unwrap();
        }
        let restored = g.shift_inverse(&g.shift(&x).unwrap()).unwrap();
        let mask = g.coverage_mask();
        for k in 0..h * w {
            let expect = if mask[k] { x.as_slice()[k] } else { 0.0 };
            prop_assert_eq!(back.as_slice()[k], expect);
            prop_assert_eq!(restored.as_slice()[k], expect);
        }
    }

    #[test]
    fn every_pixel_covered_by_origin_grid(m in 1usize..=64, h in 8usize..30, w in 8usize..30) {
        let offsets = shift_offsets(m, (8, 8)).unwrap();
        let grids: Vec<_> = offsets.iter().map(|&o| BlockGrid::new((8, 8), o, (h, w)).unwrap()).collect();
        prop_assert!(grids[0].coverage_mask().iter().all(|&c| c));
    }
}

#[test]
fn dft_round_trip() {
    let d = Dft2::<f64>::new(3, 4);
    let x: Vec<f64> = (0..12).map(|i| (i as f64).sin()).collect();
    let back = d.inverse_real(d.forward_real(&x));
    for (a, b) in back.iter().zip(&x) {
        assert!((a - b).abs() < 1e-14);
    }
}
