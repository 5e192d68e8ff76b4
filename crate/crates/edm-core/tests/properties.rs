//! Property tests for the core invariants.

use proptest::prelude::*;

use edm_core::augment::{flip_h, flip_v, to_input_tensor, Image};
use edm_core::layers::{maxpool2x2_forward, softmax_row};
use edm_core::rng::Rng;
use edm_core::tensor::{matmul, Tensor};

fn small_int_matrix(rows: usize, cols: usize) -> impl Strategy<Value = Tensor<f32>> {
    proptest::collection::vec(-4i8..=4, rows * cols)
        .prop_map(move |v| {
            Tensor::from_vec(&[rows, cols], v.into_iter().map(|x| x as f32).collect()).unwrap()
        })
}

fn small_image() -> impl Strategy<Value = Image> {
    (1usize..=8, 1usize..=8).prop_flat_map(|(w, h)| {
        proptest::collection::vec(any::<u8>(), w * h * 3)
            .prop_map(move |pixels| Image::new(w, h, pixels).unwrap())
    })
}

fn square_image() -> impl Strategy<Value = Image> {
    (1usize..=8).prop_flat_map(|s| {
        proptest::collection::vec(any::<u8>(), s * s * 3)
            .prop_map(move |pixels| Image::new(s, s, pixels).unwrap())
    })
}

proptest! {
    #[test]
    fn matmul_is_associative_on_small_integers(
        a in small_int_matrix(3, 4),
        b in small_int_matrix(4, 2),
        c in small_int_matrix(2, 3),
    ) {
        // Integer-valued and small: both routes are exact in f32.
        let left = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
        let right = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(left.data(), right.data());
    }

    #[test]
    fn shuffle_is_a_permutation(items in proptest::collection::vec(any::<u16>(), 0..100), seed in any::<u64>()) {
        let mut shuffled = items.clone();
        Rng::new(seed).shuffle(&mut shuffled);
        let mut a = items.clone();
        let mut b = shuffled;
        a.sort_unstable();
        b.sort_unstable();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn reshape_keeps_flat_data(data in proptest::collection::vec(-1.0f32..1.0, 12)) {
        let t = Tensor::from_vec(&[3, 4], data).unwrap();
        let r = t.clone().reshape(&[2, 2, 3]).unwrap();
        prop_assert_eq!(r.data(), t.data());
    }

    #[test]
    fn softmax_rows_are_distributions(row in proptest::collection::vec(-15.0f32..15.0, 2..8)) {
        // Moderate logits keep the probabilities strictly inside (0, 1)
        // even after f64 rounding.
        let probs = softmax_row(&row);
        let sum: f64 = probs.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-6);
        prop_assert!(probs.iter().all(|&p| p > 0.0 && p < 1.0));
    }

    #[test]
    fn softmax_stays_normalized_for_wide_logits(row in proptest::collection::vec(-300.0f32..300.0, 2..8)) {
        let probs = softmax_row(&row);
        let sum: f64 = probs.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-6);
        prop_assert!(probs.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn pooling_halves_spatial_extents(
        n in 1usize..=2,
        c in 1usize..=3,
        half_h in 1usize..=4,
        half_w in 1usize..=4,
        seed in any::<u64>(),
    ) {
        let (h, w) = (2 * half_h, 2 * half_w);
        let mut rng = Rng::new(seed);
        let data: Vec<f32> = (0..n * c * h * w).map(|_| rng.next_uniform() as f32).collect();
        let x = Tensor::from_vec(&[n, c, h, w], data).unwrap();
        let (y, argmax) = maxpool2x2_forward(&x).unwrap();
        prop_assert_eq!(y.dims(), &[n, c, h / 2, w / 2]);
        prop_assert_eq!(argmax.len(), y.len());
    }

    #[test]
    fn flips_are_involutions_preserving_pixels(img in small_image()) {
        let hh = flip_h(&flip_h(&img));
        let vv = flip_v(&flip_v(&img));
        prop_assert_eq!(&hh, &img);
        prop_assert_eq!(&vv, &img);

        let mut original: Vec<u8> = img.pixels().to_vec();
        let mut flipped: Vec<u8> = flip_h(&img).pixels().to_vec();
        original.sort_unstable();
        flipped.sort_unstable();
        prop_assert_eq!(original, flipped);
    }

    #[test]
    fn normalization_is_invertible_to_8bit(img in square_image()) {
        let t: Tensor<f32> = to_input_tensor(&img).unwrap();
        prop_assert!(t.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        let s = img.width();
        for y in 0..s {
            for x in 0..s {
                let px = img.pixel(x, y);
                for c in 0..3 {
                    let v = t.data()[c * s * s + y * s + x];
                    prop_assert_eq!((v * 255.0).round() as u8, px[c]);
                }
            }
        }
    }
}
