use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::matrix::{decode_binary, encode_binary};
use crate::affinity::{AffinityConfig, Bandwidth};
use crate::cca::CcaModel;
use crate::linalg::{DenseMatrix, PcaMap, SparseMatrix};
use crate::ncca::{NccaDiagnostics, NccaModel};
use crate::plcca::{PlccaModel, Predictor};
use crate::{Error, Real, Result};

const MAGIC: &[u8; 4] = b"NCCM";
const VERSION: u32 = 1;

const KIND_DENSE: u8 = 0;
const KIND_SPARSE: u8 = 1;
const KIND_SCALARS: u8 = 2;
const KIND_TEXT: u8 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Cca = 1,
    Plcca = 2,
    Ncca = 3,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Cca => "cca",
            Method::Plcca => "plcca",
            Method::Ncca => "ncca",
        }
    }
}

/// Any fitted model.
#[derive(Clone, Debug, PartialEq)]
pub enum Model<T> {
    Cca(CcaModel<T>),
    Plcca(PlccaModel<T>),
    Ncca(NccaModel<T>),
}

impl<T: Real> Model<T> {
    pub fn method(&self) -> Method {
        match self {
            Model::Cca(_) => Method::Cca,
            Model::Plcca(_) => Method::Plcca,
            Model::Ncca(_) => Method::Ncca,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Model::Cca(m) => m.dim(),
            Model::Plcca(m) => m.dim(),
            Model::Ncca(m) => m.dim(),
        }
    }
}

/// Writes `model` as an `NCCM` container.
///
/// Layout: magic `NCCM`, `u32` version 1, `u8` method (1 cca, 2 plcca,
/// 3 ncca), `u32` section count, then per section a `u32` name length, the
/// name bytes, a `u8` payload kind and the payload:
///
/// * 0: dense matrix as a complete NCM1 block;
/// * 1: sparse CSR matrix: `u64` rows, cols, nnz, then `rows + 1` `u64` row
///   offsets, `nnz` `u64` column indices and `nnz` `f64` values;
/// * 2: scalar list: `u32` count then `f64` values;
/// * 3: UTF-8 string: `u32` byte length then the bytes.
///
/// All integers and floats are little-endian.
pub fn save_model<T: Real>(path: impl AsRef<Path>, model: &Model<T>) -> Result<()> {
    let bytes = model_to_bytes(model);
    let mut f = File::create(path.as_ref())?;
    f.write_all(&bytes)?;
    f.flush()?;
    Ok(())
}

pub fn load_model<T: Real>(path: impl AsRef<Path>) -> Result<Model<T>> {
    let mut bytes = Vec::new();
    File::open(path.as_ref())?.read_to_end(&mut bytes)?;
    model_from_bytes(&bytes)
}

struct Writer {
    buf: Vec<u8>,
    count: u32,
}

impl Writer {
    fn header(&mut self, name: &str, kind: u8) {
        self.count += 1;
        self.buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
        self.buf.extend_from_slice(name.as_bytes());
        self.buf.push(kind);
    }

    fn dense<T: Real>(&mut self, name: &str, m: &DenseMatrix<T>) {
        self.header(name, KIND_DENSE);
        encode_binary(m, &mut self.buf);
    }

    fn sparse<T: Real>(&mut self, name: &str, m: &SparseMatrix<T>) {
        self.header(name, KIND_SPARSE);
        for v in [m.rows(), m.cols(), m.nnz()] {
            self.buf.extend_from_slice(&(v as u64).to_le_bytes());
        }
        for &p in m.indptr() {
            self.buf.extend_from_slice(&(p as u64).to_le_bytes());
        }
        for &j in m.indices() {
            self.buf.extend_from_slice(&(j as u64).to_le_bytes());
        }
        for &v in m.values() {
            self.buf.extend_from_slice(&v.as_f64().to_le_bytes());
        }
    }

    fn scalars<T: Real>(&mut self, name: &str, values: &[T]) {
        self.raw_scalars(name, &values.iter().map(|v| v.as_f64()).collect::<Vec<_>>());
    }

    fn raw_scalars(&mut self, name: &str, values: &[f64]) {
        self.header(name, KIND_SCALARS);
        self.buf.extend_from_slice(&(values.len() as u32).to_le_bytes());
        for v in values {
            self.buf.extend_from_slice(&v.to_le_bytes());
        }
    }

    fn text(&mut self, name: &str, s: &str) {
        self.header(name, KIND_TEXT);
        self.buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
        self.buf.extend_from_slice(s.as_bytes());
    }

    fn affinity<T: Real>(&mut self, name: &str, a: &AffinityConfig<T>) {
        let (mode, value) = match a.bandwidth {
            Bandwidth::Explicit(s) => (0.0, s.as_f64()),
            Bandwidth::FractionOfMeanNorm(f) => (1.0, f.as_f64()),
        };
        self.raw_scalars(name, &[mode, value, a.k as f64, if a.mutual { 1.0 } else { 0.0 }]);
    }

    fn pca<T: Real>(&mut self, prefix: &str, p: &Option<PcaMap<T>>) {
        if let Some(p) = p {
            self.scalars(&format!("{prefix}.mean"), &p.mean);
            self.dense(&format!("{prefix}.basis"), &p.basis);
            self.scalars(&format!("{prefix}.variances"), &p.variances);
            self.scalars(&format!("{prefix}.total_variance"), &[p.total_variance]);
        }
    }
}

pub fn model_to_bytes<T: Real>(model: &Model<T>) -> Vec<u8> {
    let mut w = Writer {
        buf: Vec::new(),
        count: 0,
    };
    w.text("producer", concat!("ncca-core ", env!("CARGO_PKG_VERSION")));
    match model {
        Model::Cca(m) => {
            w.scalars("mean_x", &m.mean_x);
            w.scalars("mean_y", &m.mean_y);
            w.dense("w1", &m.w1);
            w.dense("w2", &m.w2);
            w.scalars("correlations", &m.correlations);
            w.scalars("ridge", &[m.ridge_x, m.ridge_y]);
        }
        Model::Plcca(m) => {
            w.scalars("mean_x", &m.mean_x);
            w.dense("whitener", &m.whitener);
            w.dense("u", &m.u);
            w.scalars("d", &m.d);
            w.scalars("xhat_mean", &m.xhat_mean);
            w.scalars("ridge", &[m.ridge]);
            match &m.predictor {
                Predictor::NadarayaWatson {
                    train_y,
                    train_x,
                    y_affinity,
                } => {
                    w.text("predictor", "nadaraya-watson");
                    w.dense("train_y", train_y);
                    w.dense("train_x", train_x);
                    w.affinity("y_affinity", y_affinity);
                }
                Predictor::Linear { mean_y, coef } => {
                    w.text("predictor", "linear");
                    w.scalars("mean_y", mean_y);
                    w.dense("coef", coef);
                }
            }
            w.pca("pca_x", &m.pca_x);
            w.pca("pca_y", &m.pca_y);
        }
        Model::Ncca(m) => {
            w.dense("train_x", &m.train_x);
            if let Some(y) = &m.train_y {
                w.dense("train_y", y);
            }
            w.pca("pca_x", &m.pca_x);
            w.pca("pca_y", &m.pca_y);
            w.affinity("x_affinity", &m.x_affinity);
            w.affinity("y_affinity", &m.y_affinity);
            w.sparse("wy", &m.wy);
            if let Some(wx) = &m.wx {
                w.sparse("wx", wx);
            }
            w.scalars("singular_values", &m.singular_values);
            w.dense("f", &m.f);
            w.dense("g", &m.g);
            w.raw_scalars(
                "diagnostics",
                &[m.diagnostics.sigma1_deviation, m.diagnostics.first_vector_cv],
            );
        }
    }
    let mut out = Vec::with_capacity(13 + w.buf.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(model.method() as u8);
    out.extend_from_slice(&w.count.to_le_bytes());
    out.extend_from_slice(&w.buf);
    out
}

enum Payload<T> {
    Dense(DenseMatrix<T>),
    Sparse(SparseMatrix<T>),
    Scalars(Vec<f64>),
    Text(String),
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format("model file is truncated"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn len(&mut self, count: u64, width: usize) -> Result<usize> {
        let n = usize::try_from(count).map_err(|_| Error::format("length overflows"))?;
        if n.checked_mul(width).map_or(true, |b| b > self.bytes.len() - self.pos) {
            return Err(Error::format("model file is truncated"));
        }
        Ok(n)
    }

    fn u64s(&mut self, count: u64) -> Result<Vec<usize>> {
        let n = self.len(count, 8)?;
        (0..n)
            .map(|_| usize::try_from(self.u64()?).map_err(|_| Error::format("index overflows")))
            .collect()
    }

    fn f64s(&mut self, count: u64) -> Result<Vec<f64>> {
        let n = self.len(count, 8)?;
        (0..n)
            .map(|_| Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap())))
            .collect()
    }
}

struct Sections<T> {
    map: BTreeMap<String, Payload<T>>,
}

impl<T: Real> Sections<T> {
    fn missing(name: &str) -> Error {
        Error::format(format!("model is missing section {name:?}"))
    }

    fn wrong(name: &str, want: &str) -> Error {
        Error::format(format!("section {name:?} is not a {want}"))
    }

    fn has(&self, name: &str) -> bool {
        self.map.contains_key(name)
    }

    fn dense(&mut self, name: &str) -> Result<DenseMatrix<T>> {
        match self.map.remove(name) {
            Some(Payload::Dense(m)) => Ok(m),
            Some(_) => Err(Self::wrong(name, "dense matrix")),
            None => Err(Self::missing(name)),
        }
    }

    fn opt_dense(&mut self, name: &str) -> Result<Option<DenseMatrix<T>>> {
        if self.has(name) {
            self.dense(name).map(Some)
        } else {
            Ok(None)
        }
    }

    fn sparse(&mut self, name: &str) -> Result<SparseMatrix<T>> {
        match self.map.remove(name) {
            Some(Payload::Sparse(m)) => Ok(m),
            Some(_) => Err(Self::wrong(name, "sparse matrix")),
            None => Err(Self::missing(name)),
        }
    }

    fn raw(&mut self, name: &str) -> Result<Vec<f64>> {
        match self.map.remove(name) {
            Some(Payload::Scalars(v)) => Ok(v),
            Some(_) => Err(Self::wrong(name, "scalar list")),
            None => Err(Self::missing(name)),
        }
    }

    fn raw_len(&mut self, name: &str, len: usize) -> Result<Vec<f64>> {
        let v = self.raw(name)?;
        if v.len() != len {
            return Err(Error::format(format!(
                "section {name:?} holds {} values, expected {len}",
                v.len()
            )));
        }
        Ok(v)
    }

    fn scalars(&mut self, name: &str) -> Result<Vec<T>> {
        let v = self.raw(name)?;
        if let Some(bad) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("section {name:?}, entry {bad}")));
        }
        Ok(v.into_iter().map(T::lit).collect())
    }

    fn text(&mut self, name: &str) -> Result<String> {
        match self.map.remove(name) {
            Some(Payload::Text(s)) => Ok(s),
            Some(_) => Err(Self::wrong(name, "string")),
            None => Err(Self::missing(name)),
        }
    }

    fn affinity(&mut self, name: &str) -> Result<AffinityConfig<T>> {
        let v = self.raw_len(name, 4)?;
        let value = T::lit(v[1]);
        let bandwidth = match v[0] as u8 {
            0 => Bandwidth::Explicit(value),
            1 => Bandwidth::FractionOfMeanNorm(value),
            _ => return Err(Error::format(format!("section {name:?}: unknown bandwidth mode"))),
        };
        if !(v[2] >= 1.0 && v[2].fract() == 0.0) {
            return Err(Error::format(format!("section {name:?}: invalid neighbor count")));
        }
        let config = AffinityConfig {
            bandwidth,
            k: v[2] as usize,
            mutual: v[3] != 0.0,
        };
        config.validate()?;
        Ok(config)
    }

    fn pca(&mut self, prefix: &str) -> Result<Option<PcaMap<T>>> {
        let basis_name = format!("{prefix}.basis");
        if !self.has(&basis_name) {
            return Ok(None);
        }
        let basis = self.dense(&basis_name)?;
        let mean = self.scalars(&format!("{prefix}.mean"))?;
        let variances = self.scalars(&format!("{prefix}.variances"))?;
        let total = self.scalars(&format!("{prefix}.total_variance"))?;
        if mean.len() != basis.rows() || variances.len() != basis.cols() || total.len() != 1 {
            return Err(Error::format(format!("PCA sections {prefix:?} have inconsistent sizes")));
        }
        Ok(Some(PcaMap {
            mean,
            basis,
            variances,
            total_variance: total[0],
        }))
    }
}

pub fn model_from_bytes<T: Real>(bytes: &[u8]) -> Result<Model<T>> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4).map_err(|_| Error::format("not a model file"))? != MAGIC {
        return Err(Error::format("bad model magic"));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::Version {
            found: version,
            expected: VERSION,
        });
    }
    let method = match c.u8()? {
        1 => Method::Cca,
        2 => Method::Plcca,
        3 => Method::Ncca,
        other => return Err(Error::format(format!("unknown model method {other}"))),
    };
    let count = c.u32()?;
    let mut map = BTreeMap::new();
    for _ in 0..count {
        let name_len = c.u32()? as usize;
        let name = std::str::from_utf8(c.take(name_len)?)
            .map_err(|_| Error::format("section name is not UTF-8"))?
            .to_owned();
        let payload = match c.u8()? {
            KIND_DENSE => {
                let (m, used) = decode_binary(&bytes[c.pos..])?;
                c.pos += used;
                Payload::Dense(m)
            }
            KIND_SPARSE => {
                let rows = c.u64()?;
                let cols = c.u64()?;
                let nnz = c.u64()?;
                let indptr = c.u64s(rows.checked_add(1).ok_or_else(|| Error::format("row count overflows"))?)?;
                let indices = c.u64s(nnz)?;
                let values = c.f64s(nnz)?.into_iter().map(T::lit).collect();
                Payload::Sparse(SparseMatrix::try_from_csr(
                    rows as usize,
                    cols as usize,
                    indptr,
                    indices,
                    values,
                )?)
            }
            KIND_SCALARS => {
                let n = c.u32()?;
                Payload::Scalars(c.f64s(n as u64)?)
            }
            KIND_TEXT => {
                let n = c.u32()? as usize;
                let s = std::str::from_utf8(c.take(n)?).map_err(|_| Error::format("string section is not UTF-8"))?;
                Payload::Text(s.to_owned())
            }
            other => return Err(Error::format(format!("section {name:?} has unknown kind {other}"))),
        };
        if map.insert(name.clone(), payload).is_some() {
            return Err(Error::format(format!("duplicate section {name:?}")));
        }
    }
    if c.pos != bytes.len() {
        return Err(Error::format("trailing bytes after the last section"));
    }
    let mut s = Sections { map };
    let model = match method {
        Method::Cca => cca_from(&mut s).map(Model::Cca),
        Method::Plcca => plcca_from(&mut s).map(Model::Plcca),
        Method::Ncca => ncca_from(&mut s).map(Model::Ncca),
    }?;
    Ok(model)
}

fn cca_from<T: Real>(s: &mut Sections<T>) -> Result<CcaModel<T>> {
    let mean_x = s.scalars("mean_x")?;
    let mean_y = s.scalars("mean_y")?;
    let w1 = s.dense("w1")?;
    let w2 = s.dense("w2")?;
    let correlations = s.scalars("correlations")?;
    let ridge = s.scalars("ridge")?;
    let l = correlations.len();
    if w1.shape() != (mean_x.len(), l) || w2.shape() != (mean_y.len(), l) || ridge.len() != 2 {
        return Err(Error::format("CCA sections have inconsistent sizes"));
    }
    Ok(CcaModel {
        mean_x,
        mean_y,
        w1,
        w2,
        correlations,
        ridge_x: ridge[0],
        ridge_y: ridge[1],
    })
}

fn plcca_from<T: Real>(s: &mut Sections<T>) -> Result<PlccaModel<T>> {
    let mean_x = s.scalars("mean_x")?;
    let whitener = s.dense("whitener")?;
    let u = s.dense("u")?;
    let d = s.scalars("d")?;
    let xhat_mean = s.scalars("xhat_mean")?;
    let ridge = s.scalars("ridge")?;
    let dx = mean_x.len();
    if whitener.shape() != (dx, dx) || u.shape() != (dx, d.len()) || xhat_mean.len() != dx || ridge.len() != 1 {
        return Err(Error::format("PLCCA sections have inconsistent sizes"));
    }
    if d.iter().any(|&v| !(v > T::zero())) {
        return Err(Error::format("PLCCA eigenvalues must be positive"));
    }
    let predictor = match s.text("predictor")?.as_str() {
        "nadaraya-watson" => {
            let train_y = s.dense("train_y")?;
            let train_x = s.dense("train_x")?;
            let y_affinity = s.affinity("y_affinity")?;
            if train_x.cols() != dx || train_x.rows() != train_y.rows() {
                return Err(Error::format("PLCCA training tables have inconsistent sizes"));
            }
            Predictor::NadarayaWatson {
                train_y,
                train_x,
                y_affinity,
            }
        }
        "linear" => {
            let mean_y = s.scalars("mean_y")?;
            let coef = s.dense("coef")?;
            if coef.shape() != (mean_y.len(), dx) {
                return Err(Error::format("PLCCA linear predictor has inconsistent sizes"));
            }
            Predictor::Linear { mean_y, coef }
        }
        other => return Err(Error::format(format!("unknown PLCCA predictor {other:?}"))),
    };
    let pca_x = s.pca("pca_x")?;
    let pca_y = s.pca("pca_y")?;
    if pca_x.as_ref().is_some_and(|p| p.output_dim() != dx) {
        return Err(Error::format("first-view PCA does not match the model"));
    }
    Ok(PlccaModel {
        mean_x,
        whitener,
        u,
        d,
        xhat_mean,
        ridge: ridge[0],
        predictor,
        pca_x,
        pca_y,
    })
}

fn ncca_from<T: Real>(s: &mut Sections<T>) -> Result<NccaModel<T>> {
    let train_x = s.dense("train_x")?;
    let train_y = s.opt_dense("train_y")?;
    let pca_x = s.pca("pca_x")?;
    let pca_y = s.pca("pca_y")?;
    let x_affinity = s.affinity("x_affinity")?;
    let y_affinity = s.affinity("y_affinity")?;
    let wy = s.sparse("wy")?;
    let wx = if s.has("wx") { Some(s.sparse("wx")?) } else { None };
    let singular_values = s.scalars("singular_values")?;
    let f = s.dense("f")?;
    let g = s.dense("g")?;
    let diag = s.raw_len("diagnostics", 2)?;
    if pca_x.as_ref().is_some_and(|p| p.output_dim() != train_x.cols()) {
        return Err(Error::format("first-view PCA does not match the training inputs"));
    }
    if let (Some(p), Some(y)) = (&pca_y, &train_y) {
        if p.output_dim() != y.cols() {
            return Err(Error::format("second-view PCA does not match the training inputs"));
        }
    }
    NccaModel::from_parts(
        train_x,
        train_y,
        pca_x,
        pca_y,
        x_affinity,
        y_affinity,
        wy,
        wx,
        singular_values,
        f,
        g,
        NccaDiagnostics {
            sigma1_deviation: diag[0],
            first_vector_cv: diag[1],
        },
    )
    .map_err(|e| Error::format(format!("inconsistent NCCA model: {e}")))
}
