use rand::Rng;

use crate::diffcore::{NdArray, Real, Tape, Var};
use crate::error::{Error, Result};
use crate::volume::{Image, VoxelGrid};

use super::arch::{PAD, STRIDE};
use super::{Architecture, ParamGroup, ParamStore};

pub const LEAKY_SLOPE: f64 = 0.2;

/// Latent vector produced by the encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCode<T>(pub Vec<T>);

impl<T: Real> LatentCode<T> {
    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Architecture plus parameters for encoder, generator and discriminator.
#[derive(Debug, Clone, PartialEq)]
pub struct Networks<T> {
    arch: Architecture,
    params: ParamStore<T>,
}

/// Parameters placed on a tape as leaves, index-aligned with the store.
pub struct Bound<'t, T> {
    vars: Vec<Var<'t, T>>,
    names: Vec<String>,
}

impl<'t, T: Real> Bound<'t, T> {
    pub fn get(&self, name: &str) -> Var<'t, T> {
        let i = self
            .names
            .iter()
            .position(|n| n == name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"));
        self.vars[i]
    }

    pub fn vars(&self) -> &[Var<'t, T>] {
        &self.vars
    }

    /// Substitutes the leaf of parameter `index`, e.g. to differentiate with
    /// respect to a perturbed copy.
    pub fn replace(&mut self, index: usize, var: Var<'t, T>) {
        self.vars[index] = var;
    }

    /// Leaves of one network, in store order.
    pub fn group(&self, group: ParamGroup) -> Vec<Var<'t, T>> {
        self.names
            .iter()
            .zip(&self.vars)
            .filter(|(n, _)| ParamGroup::of(n) == Some(group))
            .map(|(_, v)| *v)
            .collect()
    }
}

impl<T: Real> Networks<T> {
    pub fn init<R: Rng + ?Sized>(arch: Architecture, rng: &mut R) -> Result<Self> {
        arch.validate()?;
        let params = ParamStore::init(&arch, rng);
        Ok(Self { arch, params })
    }

    pub fn from_params(arch: Architecture, params: ParamStore<T>) -> Result<Self> {
        arch.validate()?;
        if arch.parameter_shapes() != params.shapes() {
            return Err(Error::Shape("parameters do not match the architecture".into()));
        }
        Ok(Self { arch, params })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.params
    }

    pub fn cast<U: Real>(&self) -> Networks<U> {
        Networks {
            arch: self.arch.clone(),
            params: self.params.cast(),
        }
    }

    /// Sets every weight and bias of the named layer (e.g. `"gen.deconv2"`)
    /// to zero.
    pub fn zero_layer(&mut self, layer: &str) {
        for suffix in [".w", ".b"] {
            let i = self
                .params
                .position(&format!("{layer}{suffix}"))
                .unwrap_or_else(|| panic!("no layer {layer}"));
            let dims = self.params.param(i).value.dims().to_vec();
            self.params.set(i, NdArray::zeros(&dims));
        }
    }

    /// Sets the bias of the generator's last layer so that, with the other
    /// contributions at zero, every output voxel equals `occupancy`.
    pub fn set_initial_occupancy(&mut self, occupancy: f64) -> Result<()> {
        if !(occupancy > 0.0 && occupancy < 1.0) {
            return Err(Error::Value(format!("occupancy {occupancy} outside (0, 1)")));
        }
        let logit = T::from_f64_lossy((occupancy / (1.0 - occupancy)).ln());
        let name = format!("gen.deconv{}.b", self.arch.generator.len() - 1);
        let i = self.params.position(&name).expect("generator has an output layer");
        let dims = self.params.param(i).value.dims().to_vec();
        self.params.set(i, NdArray::full(&dims, logit));
        Ok(())
    }

    pub fn bind<'t>(&self, tape: &'t Tape<T>) -> Bound<'t, T> {
        Bound {
            vars: self
                .params
                .iter()
                .map(|p| tape.leaf_shared(p.value.clone()))
                .collect(),
            names: self.params.iter().map(|p| p.name.clone()).collect(),
        }
    }

    fn conv_stack<'t>(&self, b: &Bound<'t, T>, prefix: &str, stages: usize, image: Var<'t, T>) -> Var<'t, T> {
        let slope = T::from_f64_lossy(LEAKY_SLOPE);
        let mut h = image;
        for i in 0..stages {
            let w = b.get(&format!("{prefix}.conv{i}.w"));
            let bias = b.get(&format!("{prefix}.conv{i}.b"));
            h = h.conv2d(&w, &bias, STRIDE, PAD).leaky_relu(slope);
        }
        h.dense(&b.get(&format!("{prefix}.fc.w")), &b.get(&format!("{prefix}.fc.b")))
    }

    /// `[n_c, n, n]` image to `[z_dim]` code.
    pub fn encode_var<'t>(&self, b: &Bound<'t, T>, image: Var<'t, T>) -> Var<'t, T> {
        self.conv_stack(b, "enc", self.arch.encoder.len(), image)
    }

    /// `[z_dim]` code to a `[n_c, n, n, n]` grid in `(0, 1)`.
    pub fn generate_var<'t>(&self, b: &Bound<'t, T>, z: Var<'t, T>) -> Var<'t, T> {
        let slope = T::from_f64_lossy(LEAKY_SLOPE);
        let base = self.arch.generator_base();
        let g0 = self.arch.generator[0];
        let mut h = z
            .dense(&b.get("gen.fc.w"), &b.get("gen.fc.b"))
            .leaky_relu(slope)
            .reshape(&[g0, base, base, base]);
        let last = self.arch.generator.len() - 1;
        for i in 0..=last {
            let w = b.get(&format!("gen.deconv{i}.w"));
            let bias = b.get(&format!("gen.deconv{i}.b"));
            h = h.conv_transpose3d(&w, &bias, STRIDE, PAD);
            h = if i == last { h.sigmoid() } else { h.leaky_relu(slope) };
        }
        h
    }

    /// `[n_c, n, n]` image to a `[1]` realness logit.
    pub fn discriminate_var<'t>(&self, b: &Bound<'t, T>, image: Var<'t, T>) -> Var<'t, T> {
        self.conv_stack(b, "dis", self.arch.discriminator.len(), image)
    }

    pub fn check_image(&self, image: &Image<T>) -> Result<()> {
        let want = [self.arch.image_channels, self.arch.resolution, self.arch.resolution];
        if image.array().dims() != want {
            return Err(Error::Shape(format!(
                "network expects image {want:?}, got {:?}",
                image.array().dims()
            )));
        }
        Ok(())
    }

    pub fn encode(&self, image: &Image<T>) -> Result<LatentCode<T>> {
        self.check_image(image)?;
        let tape = Tape::new();
        let b = self.bind(&tape);
        let z = self.encode_var(&b, tape.constant(image.array().clone()));
        Ok(LatentCode(z.value().as_slice().to_vec()))
    }

    pub fn generate(&self, z: &LatentCode<T>) -> Result<VoxelGrid<T>> {
        if z.dim() != self.arch.z_dim {
            return Err(Error::Shape(format!(
                "latent code has {} entries, generator expects {}",
                z.dim(),
                self.arch.z_dim
            )));
        }
        let tape = Tape::new();
        let b = self.bind(&tape);
        let v = self.generate_var(&b, tape.constant(NdArray::from_vec(&[z.dim()], z.0.clone())));
        VoxelGrid::from_array((*v.value()).clone())
    }

    /// `(sigmoid(logit), logit)`
    pub fn discriminate(&self, image: &Image<T>) -> Result<(T, T)> {
        self.check_image(image)?;
        let tape = Tape::new();
        let b = self.bind(&tape);
        let logit = self.discriminate_var(&b, tape.constant(image.array().clone())).value().item();
        Ok((crate::diffcore::sigmoid(logit), logit))
    }

    /// View-space reconstruction `G(E(image))`.
    pub fn reconstruct(&self, image: &Image<T>) -> Result<VoxelGrid<T>> {
        self.generate(&self.encode(image)?)
    }
}
