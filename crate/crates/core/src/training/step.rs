use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::diffcore::{NdArray, Real, Tape, Var};
use crate::error::{Error, Result};
use crate::networks::{Bound, Networks, ParamGroup};
use crate::render::{render_var, FormationMode};
use crate::volume::{sample_view, Image, ViewDirection};

use super::{
    discriminator_loss_var, generator_loss_var, reconstruction_loss_var, Adam, Freeze, TrainConfig,
};

/// Loss values of one batch element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementLosses {
    pub c_dis: f64,
    pub c_gen: f64,
    pub c_rec: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: usize,
    /// Batch means.
    pub c_dis: f64,
    pub c_gen: f64,
    pub c_rec: f64,
    /// L2 norm of the discriminator update direction.
    pub grad_norm_dis: f64,
    /// L2 norm of the encoder/generator gradient.
    pub grad_norm_gen: f64,
    pub seconds: f64,
    /// A loss or gradient was not finite; parameters were left unchanged.
    pub diverged: bool,
}

/// Network parameters plus the two optimizers that own their updates.
#[derive(Debug, Clone)]
pub struct Trainer<T> {
    pub nets: Networks<T>,
    pub config: TrainConfig,
    dis_opt: Adam<T>,
    gen_opt: Adam<T>,
    dis_slots: Vec<usize>,
    gen_slots: Vec<usize>,
    step: usize,
}

impl<T: Real> Trainer<T> {
    /// Fresh networks initialized from `config.seed`.
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut nets = Networks::init(config.architecture(), &mut rng)?;
        if config.initial_occupancy != 0.5 {
            nets.set_initial_occupancy(config.initial_occupancy)?;
        }
        Self::from_networks(nets, config)
    }

    pub fn from_networks(nets: Networks<T>, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let (mut dis_slots, mut gen_slots) = (Vec::new(), Vec::new());
        for (i, p) in nets.params().iter().enumerate() {
            match ParamGroup::of(&p.name) {
                Some(ParamGroup::Discriminator) => dis_slots.push(i),
                Some(_) => gen_slots.push(i),
                None => return Err(Error::Config(format!("parameter `{}` belongs to no network", p.name))),
            }
        }
        let sizes = |slots: &[usize]| slots.iter().map(|&i| nets.params().param(i).value.len()).collect::<Vec<_>>();
        let adam = |slots: &[usize]| {
            Adam::new(&sizes(slots), config.learning_rate, config.beta1, config.beta2, config.adam_epsilon)
        };
        Ok(Self {
            dis_opt: adam(&dis_slots),
            gen_opt: adam(&gen_slots),
            nets,
            config,
            dis_slots,
            gen_slots,
            step: 0,
        })
    }

    /// Steps completed so far.
    pub fn step_index(&self) -> usize {
        self.step
    }
}

/// The encoder/generator objective `c_Gen + lambda * c_Rec` for a generator
/// output `v` (camera frame of `image`), rendered from `view` and judged by
/// the discriminator.
pub fn generator_objective_var<'t, T: Real>(
    nets: &Networks<T>,
    b: &Bound<'t, T>,
    image: Var<'t, T>,
    v: Var<'t, T>,
    view: &ViewDirection,
    config: &TrainConfig,
) -> Result<Var<'t, T>> {
    let (_, c_gen, c_rec) = losses_var(nets, b, image, v, view, config)?;
    Ok(combine(c_gen, c_rec, image, config))
}

fn combine<'t, T: Real>(c_gen: Var<'t, T>, c_rec: Var<'t, T>, image: Var<'t, T>, config: &TrainConfig) -> Var<'t, T> {
    let weight = config.rec_weight(image.value().len());
    c_gen.add(&c_rec.scale(T::from_f64_lossy(weight)))
}

/// `(c_Dis, c_Gen, c_Rec)` for one element.
fn losses_var<'t, T: Real>(
    nets: &Networks<T>,
    b: &Bound<'t, T>,
    image: Var<'t, T>,
    v: Var<'t, T>,
    view: &ViewDirection,
    config: &TrainConfig,
) -> Result<(Var<'t, T>, Var<'t, T>, Var<'t, T>)> {
    let f = config.formation;
    let mut fake_image = render_var(view, v, f)?;
    if f.mode == FormationMode::EmissionAbsorptionPaper {
        fake_image = fake_image.clamp(T::zero(), T::one());
    }
    let real = nets.discriminate_var(b, image);
    let fake = nets.discriminate_var(b, fake_image);
    let c_dis = discriminator_loss_var(real, fake);
    let c_gen = generator_loss_var(fake, config.non_saturating);
    let c_rec = reconstruction_loss_var(image, v, f)?;
    Ok((c_dis, c_gen, c_rec))
}

/// Loss values for one element without gradients.
pub fn element_losses<T: Real>(
    nets: &Networks<T>,
    image: &Image<T>,
    view: &ViewDirection,
    config: &TrainConfig,
) -> Result<ElementLosses> {
    nets.check_image(image)?;
    let tape = Tape::new();
    let b = nets.bind(&tape);
    let i = tape.constant(image.array().clone());
    let v = nets.generate_var(&b, nets.encode_var(&b, i));
    let (d, g, r) = losses_var(nets, &b, i, v, view, config)?;
    Ok(ElementLosses {
        c_dis: d.value().item().to_f64_lossy(),
        c_gen: g.value().item().to_f64_lossy(),
        c_rec: r.value().item().to_f64_lossy(),
    })
}

struct ElementGrads<T> {
    losses: ElementLosses,
    /// Descent direction for the discriminator, i.e. the gradient of `-c_Dis`.
    dis: Vec<NdArray<T>>,
    gen: Vec<NdArray<T>>,
}

fn element_grads<T: Real>(
    trainer: &Trainer<T>,
    image: &Image<T>,
    view: &ViewDirection,
) -> Result<ElementGrads<T>> {
    let tape = Tape::new();
    element_grads_on(trainer, &tape, image, view)
}

fn element_grads_on<'t, T: Real>(
    trainer: &Trainer<T>,
    tape: &'t Tape<T>,
    image: &Image<T>,
    view: &ViewDirection,
) -> Result<ElementGrads<T>> {
    let (nets, config) = (&trainer.nets, &trainer.config);
    let b = nets.bind(tape);
    let i = tape.constant(image.array().clone());
    let v = nets.generate_var(&b, nets.encode_var(&b, i));
    let (c_dis, c_gen, c_rec) = losses_var(nets, &b, i, v, view, config)?;
    let gen_obj = combine(c_gen, c_rec, i, config);

    let freeze = |x: Var<'t, T>, frozen: bool| if frozen { tape.constant((*x.value()).clone()) } else { x };
    let dis_target = freeze(-c_dis, config.freeze == Freeze::Discriminator);
    let gen_target = freeze(gen_obj, config.freeze == Freeze::Generator);

    let vars = b.vars();
    let dis_vars: Vec<_> = trainer.dis_slots.iter().map(|&s| vars[s]).collect();
    let gen_vars: Vec<_> = trainer.gen_slots.iter().map(|&s| vars[s]).collect();
    let gd = tape.backward_wrt(dis_target, &dis_vars)?;
    let dis = dis_vars.iter().map(|&x| gd.wrt(x)).collect();
    drop(gd);
    let gg = tape.backward_wrt(gen_target, &gen_vars)?;
    let gen = gen_vars.iter().map(|&x| gg.wrt(x)).collect();
    Ok(ElementGrads {
        losses: ElementLosses {
            c_dis: c_dis.value().item().to_f64_lossy(),
            c_gen: c_gen.value().item().to_f64_lossy(),
            c_rec: c_rec.value().item().to_f64_lossy(),
        },
        dis,
        gen,
    })
}

fn mean_grads<T: Real>(parts: impl Iterator<Item = Vec<NdArray<T>>>, count: usize) -> Vec<NdArray<T>> {
    let mut acc: Option<Vec<NdArray<T>>> = None;
    for p in parts {
        match &mut acc {
            None => acc = Some(p),
            Some(a) => a.iter_mut().zip(&p).for_each(|(a, p)| a.add_assign(p)),
        }
    }
    let scale = T::one() / T::from_usize(count).unwrap();
    let acc = acc.unwrap_or_default();
    acc.iter().map(|a| a.scale(scale)).collect()
}

fn norm<T: Real>(grads: &[NdArray<T>]) -> f64 {
    grads
        .iter()
        .flat_map(|g| g.as_slice())
        .map(|&x| {
            let x = x.to_f64_lossy();
            x * x
        })
        .sum::<f64>()
        .sqrt()
}

/// One update: per batch element a fresh view is drawn from `rng`, the
/// element's image is encoded, generated, rendered from that view and from
/// the canonical view, and judged. The discriminator then takes one ascent
/// step on the batch-mean `c_Dis` and the encoder/generator one descent step
/// on the batch-mean `c_Gen + lambda * c_Rec`, both using gradients at the
/// parameters the step started from.
///
/// A non-finite loss, gradient or updated parameter leaves the trainer
/// unchanged and returns a report flagged `diverged`.
pub fn train_step<T: Real, R: Rng + ?Sized>(
    trainer: &mut Trainer<T>,
    batch: &[Image<T>],
    rng: &mut R,
) -> Result<StepReport> {
    let start = Instant::now();
    if batch.is_empty() {
        return Err(Error::Value("empty batch".into()));
    }
    for image in batch {
        trainer.nets.check_image(image)?;
    }
    let views: Vec<ViewDirection> = batch.iter().map(|_| sample_view(rng)).collect();
    let shared: &Trainer<T> = trainer;
    let results: Vec<Result<ElementGrads<T>>> = batch
        .par_iter()
        .zip(&views)
        .map(|(image, view)| element_grads(shared, image, view))
        .collect();
    let elements = results.into_iter().collect::<Result<Vec<_>>>()?;

    let n = elements.len();
    let mean = |f: fn(&ElementLosses) -> f64| elements.iter().map(|e| f(&e.losses)).sum::<f64>() / n as f64;
    let (c_dis, c_gen, c_rec) = (mean(|l| l.c_dis), mean(|l| l.c_gen), mean(|l| l.c_rec));
    let mut dis_parts = Vec::with_capacity(n);
    let mut gen_parts = Vec::with_capacity(n);
    for e in elements {
        dis_parts.push(e.dis);
        gen_parts.push(e.gen);
    }
    let dis = mean_grads(dis_parts.into_iter(), n);
    let gen = mean_grads(gen_parts.into_iter(), n);
    let mut report = StepReport {
        step: trainer.step,
        c_dis,
        c_gen,
        c_rec,
        grad_norm_dis: norm(&dis),
        grad_norm_gen: norm(&gen),
        seconds: 0.0,
        diverged: false,
    };
    let finite = [c_dis, c_gen, c_rec, report.grad_norm_dis, report.grad_norm_gen]
        .iter()
        .all(|x| x.is_finite());
    if finite {
        let snapshot = (trainer.nets.clone(), trainer.dis_opt.clone(), trainer.gen_opt.clone());
        let Trainer { nets, dis_opt, gen_opt, dis_slots, gen_slots, .. } = trainer;
        dis_opt.tick();
        for (slot, (&i, g)) in dis_slots.iter().zip(&dis).enumerate() {
            dis_opt.apply(slot, nets.params_mut().value_mut(i), g);
        }
        gen_opt.tick();
        for (slot, (&i, g)) in gen_slots.iter().zip(&gen).enumerate() {
            gen_opt.apply(slot, nets.params_mut().value_mut(i), g);
        }
        if !nets.params().iter().all(|p| p.value.is_finite()) {
            (trainer.nets, trainer.dis_opt, trainer.gen_opt) = snapshot;
            report.diverged = true;
        }
    } else {
        report.diverged = true;
    }
    trainer.step += 1;
    report.seconds = start.elapsed().as_secs_f64();
    Ok(report)
}
