use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::{Error, Result, Scalar};

/// Stream of i.i.d. draws `X_i` with `E[X_i] = m`.
///
/// Replay contract: the sequence of values depends only on the source's own
/// state and the generator handed to `draw`, so a fresh source driven by a
/// generator with the same seed reproduces it bit for bit.
pub trait SampleSource<T: Scalar> {
    fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<T>;

    /// Appends `n` draws to `out`.
    fn fill<R: Rng + ?Sized>(&mut self, rng: &mut R, n: usize, out: &mut Vec<T>) -> Result<()> {
        out.reserve(n);
        for _ in 0..n {
            out.push(self.draw(rng)?);
        }
        Ok(())
    }
}

/// Stream of i.i.d. pairs `(X_i, G_i)` with `E[X_i] = m(theta)` and
/// `E[G_i] = grad m(theta)` (a vector of length [`PairSource::dim`]).
pub trait PairSource<T: Scalar> {
    fn dim(&self) -> usize;

    /// Writes `G` into `g` (length `dim`) and returns `X`.
    fn draw_pair<R: Rng + ?Sized>(&mut self, rng: &mut R, g: &mut [T]) -> Result<T>;
}

impl<T: Scalar, S: SampleSource<T> + ?Sized> SampleSource<T> for &mut S {
    fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<T> {
        (**self).draw(rng)
    }
}

impl<T: Scalar, S: PairSource<T> + ?Sized> PairSource<T> for &mut S {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn draw_pair<R: Rng + ?Sized>(&mut self, rng: &mut R, g: &mut [T]) -> Result<T> {
        (**self).draw_pair(rng, g)
    }
}

/// Zero-variance source.
#[derive(Debug, Clone, Copy)]
pub struct ConstantSource<T>(pub T);

impl<T: Scalar> SampleSource<T> for ConstantSource<T> {
    fn draw<R: Rng + ?Sized>(&mut self, _rng: &mut R) -> Result<T> {
        Ok(self.0)
    }
}

/// `X ~ Normal(mean, variance)`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianSource<T: Scalar>
where
    StandardNormal: Distribution<T>,
{
    normal: Normal<T>,
}

impl<T: Scalar> GaussianSource<T>
where
    StandardNormal: Distribution<T>,
{
    pub fn new(mean: T, variance: T) -> Result<Self> {
        if !(variance >= T::zero() && variance.is_finite() && mean.is_finite()) {
            return Err(Error::domain(format!(
                "gaussian source needs finite mean and variance >= 0, got ({mean}, {variance})"
            )));
        }
        let normal = Normal::new(mean, variance.sqrt()).map_err(|e| Error::domain(format!("gaussian source: {e}")))?;
        Ok(Self { normal })
    }
}

impl<T: Scalar> SampleSource<T> for GaussianSource<T>
where
    StandardNormal: Distribution<T>,
{
    fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<T> {
        Ok(self.normal.sample(rng))
    }
}

/// Replays a finite, pre-recorded sequence; running out is a
/// [`Error::ResourceExceeded`] naming the shortfall.
#[derive(Debug, Clone)]
pub struct ReplaySource<T> {
    values: Vec<T>,
    pos: usize,
}

impl<T: Scalar> ReplaySource<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self { values, pos: 0 }
    }

    pub fn consumed(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.values.len() - self.pos
    }
}

impl<T: Scalar> SampleSource<T> for ReplaySource<T> {
    fn draw<R: Rng + ?Sized>(&mut self, _rng: &mut R) -> Result<T> {
        let v = self.values.get(self.pos).copied().ok_or_else(|| {
            Error::resource(format!(
                "sample stream exhausted: needed sample #{}, only {} available",
                self.pos + 1,
                self.values.len()
            ))
        })?;
        self.pos += 1;
        Ok(v)
    }

    fn fill<R: Rng + ?Sized>(&mut self, _rng: &mut R, n: usize, out: &mut Vec<T>) -> Result<()> {
        if n > self.remaining() {
            return Err(Error::resource(format!(
                "sample stream exhausted: needed {n} more samples, only {} remain ({} consumed of {})",
                self.remaining(),
                self.pos,
                self.values.len()
            )));
        }
        out.extend_from_slice(&self.values[self.pos..self.pos + n]);
        self.pos += n;
        Ok(())
    }
}

/// Replays recorded pairs; `gs` holds the `G` vectors row by row.
#[derive(Debug, Clone)]
pub struct ReplayPairSource<T> {
    dim: usize,
    xs: Vec<T>,
    gs: Vec<T>,
    pos: usize,
}

impl<T: Scalar> ReplayPairSource<T> {
    pub fn new(dim: usize, xs: Vec<T>, gs: Vec<T>) -> Result<Self> {
        if dim == 0 || gs.len() != xs.len() * dim {
            return Err(Error::domain(format!(
                "pair replay needs dim >= 1 and {} gradient entries, got dim = {dim} and {}",
                xs.len() * dim,
                gs.len()
            )));
        }
        Ok(Self { dim, xs, gs, pos: 0 })
    }

    pub fn consumed(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.xs.len() - self.pos
    }

    /// Skips `n` pairs, returning their `X` values.
    pub fn take_xs(&mut self, n: usize) -> Result<Vec<T>> {
        if n > self.remaining() {
            return Err(Error::resource(format!(
                "pair stream exhausted: needed {n} pairs, only {} remain",
                self.remaining()
            )));
        }
        let out = self.xs[self.pos..self.pos + n].to_vec();
        self.pos += n;
        Ok(out)
    }
}

impl<T: Scalar> PairSource<T> for ReplayPairSource<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn draw_pair<R: Rng + ?Sized>(&mut self, _rng: &mut R, g: &mut [T]) -> Result<T> {
        let x = *self.xs.get(self.pos).ok_or_else(|| {
            Error::resource(format!(
                "pair stream exhausted: needed pair #{}, only {} available",
                self.pos + 1,
                self.xs.len()
            ))
        })?;
        g.copy_from_slice(&self.gs[self.pos * self.dim..(self.pos + 1) * self.dim]);
        self.pos += 1;
        Ok(x)
    }
}

/// Adapts a closure `FnMut(&mut dyn RngCore) -> T`.
pub struct FnSource<F>(pub F);

impl<T: Scalar, F> SampleSource<T> for FnSource<F>
where
    F: FnMut(&mut dyn rand::RngCore) -> T,
{
    fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<T> {
        let mut adapter = DynRng(rng);
        Ok((self.0)(&mut adapter))
    }
}

struct DynRng<'a, R: ?Sized>(&'a mut R);

impl<R: Rng + ?Sized> rand::RngCore for DynRng<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}
