use argqual_core::contrastive::{accumulate_triplet_gradients, mean_triplet_loss, ContrastiveConfig, Distance};
use argqual_core::encoder::{EncoderConfig, HashingEncoder, TrainableEncoder};
use argqual_core::mtl::MtlModel;
use argqual_core::optim::GradBuffer;
use argqual_core::synth::{marker_corpus, marker_triplets};
use argqual_core::{Split, Task};

const H: f64 = 1e-6;
const TOL: f64 = 1e-4;

fn tiny_encoder(seed: u64) -> HashingEncoder {
    HashingEncoder::new(EncoderConfig {
        vocab_buckets: 16,
        embed_dim: 6,
        projection_dim: 8,
        seed,
    })
    .unwrap()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Central differences over every scalar parameter; returns the worst
/// relative error and how many coordinates had a nonzero gradient.
fn check<P, L>(params: &mut P, analytic: &GradBuffer, sizes: &[usize], mut set: impl FnMut(&mut P, usize, usize, f64) -> f64, loss: L) -> (f64, usize)
where
    L: Fn(&P) -> f64,
{
    let mut worst = 0.0f64;
    let mut nonzero = 0;
    for (slot, &len) in sizes.iter().enumerate() {
        for k in 0..len {
            let orig = set(params, slot, k, f64::NAN);
            set(params, slot, k, orig + H);
            let up = loss(params);
            set(params, slot, k, orig - H);
            let down = loss(params);
            set(params, slot, k, orig);
            let numeric = (up - down) / (2.0 * H);
            let a = analytic.slot(slot).map(|g| g[k]).unwrap_or(0.0);
            if a != 0.0 || numeric.abs() > 1e-9 {
                nonzero += 1;
                let e = rel_err(a, numeric);
                assert!(e <= TOL, "slot {slot} index {k}: analytic {a} numeric {numeric}");
                worst = worst.max(e);
            }
        }
    }
    (worst, nonzero)
}

/// Writes `value` unless it is NaN; returns the previous value.
fn poke(slots: Vec<&mut [f64]>, slot: usize, k: usize, value: f64) -> f64 {
    let mut slots = slots;
    let old = slots[slot][k];
    if !value.is_nan() {
        slots[slot][k] = value;
    }
    old
}

#[test]
fn cross_entropy_through_head_and_encoder() {
    let batch = marker_corpus(5, Split::Train, 21);
    for task in Task::ALL {
        let mut model = MtlModel::new("m", tiny_encoder(3), 8);
        let sizes = model.param_sizes();
        let mut grads = GradBuffer::new(&sizes);
        let refs: Vec<_> = batch.iter().collect();
        model.accumulate_gradients(&refs, task, &mut grads, 1.0).unwrap();
        let (worst, nonzero) = check(
            &mut model,
            &grads,
            &sizes,
            |m, s, k, v| poke(m.params_mut(), s, k, v),
            |m| m.loss(&batch, task).unwrap(),
        );
        assert!(nonzero > 40, "{task}: only {nonzero} live coordinates");
        eprintln!("{task}: worst relative error {worst:.2e} over {nonzero} coordinates");
    }
}

#[test]
fn mean_triplet_loss_gradients() {
    let triplets = marker_triplets(4, 2);
    // Margins large enough that every hinge is active, so the loss is smooth.
    for (distance, margin) in [(Distance::Cosine, 2.5), (Distance::Euclidean, 50.0)] {
        let cfg = ContrastiveConfig {
            margin,
            distance,
            ..ContrastiveConfig::default()
        };
        let mut enc = tiny_encoder(5);
        let sizes = enc.param_sizes();
        let mut grads = GradBuffer::new(&sizes);
        let refs: Vec<_> = triplets.iter().collect();
        accumulate_triplet_gradients(&enc, &refs, &cfg, &mut grads, 1.0).unwrap();
        let (worst, nonzero) = check(
            &mut enc,
            &grads,
            &sizes,
            |e, s, k, v| poke(e.params_mut(), s, k, v),
            |e| mean_triplet_loss(e, &triplets, &cfg).unwrap(),
        );
        assert!(nonzero > 40, "{distance:?}: only {nonzero} live coordinates");
        eprintln!("{distance:?}: worst relative error {worst:.2e} over {nonzero} coordinates");
    }
}
