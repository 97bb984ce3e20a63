//! JSON file formats and their (panic-free) parsers.
//!
//! All numeric payloads are row-major arrays of `[re, im]` pairs; complexes
//! and bundles may be inlined or referenced by path.  Every `parse_*_str`
//! entry point must survive arbitrary input — these are the surfaces the
//! fuzz targets drive.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bundles::{BundleMorphism, ProjectionField};
use crate::config::Config;
use crate::conjugacy::{AlgebraProjection, Conjugator, ObservableAlgebraElement};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::models_io::canonical::{complex_to_value, to_canonical_string};
use crate::models_io::FourierHamiltonian;
use crate::sampling::SamplePoint;
use crate::stabiso::StableIsoWitness;
use crate::symmetry::{SymmetryKind, SymmetryType};
use crate::z2complex::{validate_complex, InvolutiveComplex, RawComplex};

pub type MatrixData = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ComplexFile {
    pub vertices: Vec<String>,
    pub maximal_simplices: Vec<Vec<String>>,
    #[serde(default)]
    pub involution: BTreeMap<String, String>,
    #[serde(default, rename = "subcomplex_A")]
    pub subcomplex_a: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BaseRef {
    Path(String),
    Inline(ComplexFile),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleFile {
    pub symmetry: String,
    pub ambient_dim: usize,
    pub base: BaseRef,
    pub projections: BTreeMap<String, MatrixData>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleData {
    pub den: u32,
    pub coords: Vec<(String, u32)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MorphismSample {
    pub sample: SampleData,
    pub matrix: MatrixData,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MorphismFile {
    pub source: BundleFile,
    pub target: BundleFile,
    pub values: Vec<MorphismSample>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessFile {
    pub ell: usize,
    pub psi: MorphismFile,
    #[serde(rename = "phi_A")]
    pub phi_a: MorphismFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgebraElementFile {
    pub symmetry: String,
    pub size: usize,
    pub base: BaseRef,
    pub values: BTreeMap<String, MatrixData>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConjugatorFile {
    pub symmetry: String,
    pub size: usize,
    pub base: BaseRef,
    pub values: Vec<MorphismSample>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientData {
    pub m: Vec<i64>,
    pub matrix: MatrixData,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HamiltonianFile {
    pub dimension: usize,
    pub bands: usize,
    pub symmetry: String,
    pub coefficients: Vec<CoefficientData>,
}

fn parse_json<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::ParseError(e.to_string()))
}

fn parse_kind(name: &str) -> Result<SymmetryKind> {
    match name {
        "real" => Ok(SymmetryKind::Real),
        "quaternionic" => Ok(SymmetryKind::Quaternionic),
        other => Err(Error::ParseError(format!(
            "unknown symmetry `{other}`; expected `real` or `quaternionic`"
        ))),
    }
}

fn parse_matrix(data: &MatrixData, rows: usize, cols: usize) -> Result<CMatrix> {
    if data.len() != rows || data.iter().any(|row| row.len() != cols) {
        return Err(Error::ParseError(format!("matrix is not {rows}x{cols}")));
    }
    let mut out = CMatrix::zeros(rows, cols);
    for (i, row) in data.iter().enumerate() {
        for (j, &[re, im]) in row.iter().enumerate() {
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::ParseError("matrix entry is not finite".into()));
            }
            out[(i, j)] = Complex64::new(re, im);
        }
    }
    Ok(out)
}

fn matrix_data(m: &CMatrix) -> MatrixData {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn matrix_value(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| complex_to_value(m[(i, j)])).collect()))
            .collect(),
    )
}

// --- complexes --------------------------------------------------------

pub fn complex_to_file(complex: &InvolutiveComplex) -> ComplexFile {
    let names = complex.names();
    ComplexFile {
        vertices: names.to_vec(),
        maximal_simplices: complex
            .maximal_simplices()
            .iter()
            .map(|s| complex.simplex_names(s))
            .collect(),
        involution: (0..complex.vertex_count())
            .filter(|&v| complex.tau(v) != v)
            .map(|v| (names[v].clone(), names[complex.tau(v)].clone()))
            .collect(),
        subcomplex_a: complex
            .marked_maximal_simplices()
            .iter()
            .map(|s| complex.simplex_names(s))
            .collect(),
    }
}

pub fn file_to_complex(file: &ComplexFile) -> Result<InvolutiveComplex> {
    let raw = RawComplex {
        vertices: file.vertices.clone(),
        maximal_simplices: file.maximal_simplices.clone(),
        involution: file.involution.iter().map(|(a, b)| (a.clone(), b.clone())).collect(),
        subcomplex_a: file.subcomplex_a.clone(),
    };
    validate_complex(&raw)
}

/// Parse and validate a complex description.
pub fn parse_complex_str(text: &str) -> Result<InvolutiveComplex> {
    file_to_complex(&parse_json::<ComplexFile>(text)?)
}

pub fn complex_to_canonical_json(complex: &InvolutiveComplex) -> String {
    let value = serde_json::to_value(complex_to_file(complex)).expect("schema serializes");
    to_canonical_string(&value)
}

// --- bundles ----------------------------------------------------------

/// Resolves `BaseRef::Path` references; the in-memory parser refuses them.
pub trait BaseResolver {
    fn resolve(&self, path: &str) -> Result<InvolutiveComplex>;
}

pub struct NoExternalRefs;

impl BaseResolver for NoExternalRefs {
    fn resolve(&self, path: &str) -> Result<InvolutiveComplex> {
        Err(Error::ParseError(format!("external base reference `{path}` cannot be resolved here")))
    }
}

pub fn resolve_base(base: &BaseRef, resolver: &dyn BaseResolver) -> Result<InvolutiveComplex> {
    match base {
        BaseRef::Inline(file) => file_to_complex(file),
        BaseRef::Path(path) => resolver.resolve(path),
    }
}

pub fn bundle_to_file(field: &ProjectionField) -> BundleFile {
    BundleFile {
        symmetry: field.kind().as_str().to_string(),
        ambient_dim: field.ambient_dim(),
        base: BaseRef::Inline(complex_to_file(field.base())),
        projections: (0..field.base().vertex_count())
            .map(|v| (field.base().name_of(v).to_string(), matrix_data(field.vertex_projection(v))))
            .collect(),
        gap: Some(field.gap()),
        rank: Some(field.rank()),
    }
}

pub fn file_to_bundle(
    file: &BundleFile,
    resolver: &dyn BaseResolver,
    config: &Config,
) -> Result<ProjectionField> {
    let kind = parse_kind(&file.symmetry)?;
    let base = Arc::new(resolve_base(&file.base, resolver)?);
    let n = file.ambient_dim;
    let sym = SymmetryType::new(kind, n)?;
    let mut proj = Vec::with_capacity(base.vertex_count());
    for v in 0..base.vertex_count() {
        let data = file.projections.get(base.name_of(v)).ok_or_else(|| {
            Error::ParseError(format!("projection for vertex `{}` missing", base.name_of(v)))
        })?;
        proj.push(parse_matrix(data, n, n)?);
    }
    let field = ProjectionField::new(sym, base, proj, config)?;
    if let Some(declared) = file.rank {
        if declared != field.rank() {
            return Err(Error::RankMismatch {
                context: format!("declared rank {declared}, measured {}", field.rank()),
            });
        }
    }
    Ok(field)
}

/// Parse and certify a bundle with an inline base.
pub fn parse_bundle_str(text: &str, config: &Config) -> Result<ProjectionField> {
    file_to_bundle(&parse_json::<BundleFile>(text)?, &NoExternalRefs, config)
}

pub fn bundle_to_canonical_json(field: &ProjectionField) -> String {
    let value = serde_json::to_value(bundle_to_file(field)).expect("schema serializes");
    to_canonical_string(&value)
}

// --- morphisms and witnesses -------------------------------------------

fn sample_to_data(point: &SamplePoint, base: &InvolutiveComplex) -> SampleData {
    SampleData {
        den: point.den,
        coords: point
            .parts
            .iter()
            .map(|&(v, w)| (base.name_of(v).to_string(), w))
            .collect(),
    }
}

fn data_to_sample(data: &SampleData, base: &InvolutiveComplex) -> Result<SamplePoint> {
    if data.den == 0 {
        return Err(Error::ParseError("sample denominator is zero".into()));
    }
    let mut weights = Vec::with_capacity(data.coords.len());
    let mut total: u64 = 0;
    for (name, w) in &data.coords {
        let v = base
            .vertex_by_name(name)
            .ok_or_else(|| Error::ParseError(format!("sample references unknown vertex `{name}`")))?;
        total += *w as u64;
        weights.push((v, *w));
    }
    if total != data.den as u64 {
        return Err(Error::ParseError("sample weights do not sum to the denominator".into()));
    }
    let point = SamplePoint::new(data.den, weights);
    if point.parts.is_empty() {
        return Err(Error::ParseError("sample has no support".into()));
    }
    {
        let support = point.support();
        if !base.contains_simplex(&support) {
            return Err(Error::ParseError("sample support is not a simplex of the base".into()));
        }
    }
    Ok(point)
}

pub fn morphism_to_file(phi: &BundleMorphism) -> MorphismFile {
    let base = phi.source.base();
    let mut entries: Vec<(SamplePoint, &CMatrix)> =
        phi.values.iter().map(|(k, v)| (k.clone(), v)).collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    MorphismFile {
        source: bundle_to_file(&phi.source),
        target: bundle_to_file(&phi.target),
        values: entries
            .into_iter()
            .map(|(point, m)| MorphismSample {
                sample: sample_to_data(&point, base),
                matrix: matrix_data(m),
            })
            .collect(),
    }
}

pub fn file_to_morphism(
    file: &MorphismFile,
    resolver: &dyn BaseResolver,
    config: &Config,
) -> Result<BundleMorphism> {
    let source = Arc::new(file_to_bundle(&file.source, resolver, config)?);
    let target = Arc::new(file_to_bundle(&file.target, resolver, config)?);
    let mut values = HashMap::with_capacity(file.values.len());
    for entry in &file.values {
        let point = data_to_sample(&entry.sample, source.base())?;
        let matrix = parse_matrix(&entry.matrix, target.ambient_dim(), source.ambient_dim())?;
        values.insert(point, matrix);
    }
    BundleMorphism::new(source, target, values)
}

pub fn parse_morphism_str(text: &str, config: &Config) -> Result<BundleMorphism> {
    file_to_morphism(&parse_json::<MorphismFile>(text)?, &NoExternalRefs, config)
}

pub fn witness_to_file(witness: &StableIsoWitness) -> WitnessFile {
    WitnessFile {
        ell: witness.ell,
        psi: morphism_to_file(&witness.psi),
        phi_a: morphism_to_file(&witness.phi_a),
    }
}

pub fn file_to_witness(
    file: &WitnessFile,
    resolver: &dyn BaseResolver,
    config: &Config,
) -> Result<StableIsoWitness> {
    Ok(StableIsoWitness {
        ell: file.ell,
        psi: file_to_morphism(&file.psi, resolver, config)?,
        phi_a: file_to_morphism(&file.phi_a, resolver, config)?,
    })
}

pub fn parse_witness_str(text: &str, config: &Config) -> Result<StableIsoWitness> {
    file_to_witness(&parse_json::<WitnessFile>(text)?, &NoExternalRefs, config)
}

pub fn witness_to_canonical_json(witness: &StableIsoWitness) -> String {
    let value = serde_json::to_value(witness_to_file(witness)).expect("schema serializes");
    to_canonical_string(&value)
}

pub fn morphism_to_canonical_json(phi: &BundleMorphism) -> String {
    let value = serde_json::to_value(morphism_to_file(phi)).expect("schema serializes");
    to_canonical_string(&value)
}

// --- algebra elements ---------------------------------------------------

pub fn algebra_element_to_file(f: &ObservableAlgebraElement) -> AlgebraElementFile {
    AlgebraElementFile {
        symmetry: f.sym.kind.as_str().to_string(),
        size: f.matrix_size(),
        base: BaseRef::Inline(complex_to_file(&f.base)),
        values: (0..f.base.vertex_count())
            .map(|v| (f.base.name_of(v).to_string(), matrix_data(&f.values[v])))
            .collect(),
    }
}

pub fn file_to_algebra_element(
    file: &AlgebraElementFile,
    resolver: &dyn BaseResolver,
) -> Result<ObservableAlgebraElement> {
    let kind = parse_kind(&file.symmetry)?;
    let base = Arc::new(resolve_base(&file.base, resolver)?);
    let mut values = Vec::with_capacity(base.vertex_count());
    for v in 0..base.vertex_count() {
        let data = file.values.get(base.name_of(v)).ok_or_else(|| {
            Error::ParseError(format!("value for vertex `{}` missing", base.name_of(v)))
        })?;
        values.push(parse_matrix(data, file.size, file.size)?);
    }
    ObservableAlgebraElement::new(kind, base, values)
}

pub fn parse_algebra_element_str(text: &str) -> Result<ObservableAlgebraElement> {
    file_to_algebra_element(&parse_json::<AlgebraElementFile>(text)?, &NoExternalRefs)
}

pub fn parse_projection_str(text: &str, config: &Config) -> Result<AlgebraProjection> {
    let element = parse_algebra_element_str(text)?;
    AlgebraProjection::new(element, config)
}

pub fn conjugator_to_file(v: &Conjugator) -> ConjugatorFile {
    let mut entries: Vec<(&SamplePoint, &CMatrix)> = v.values.iter().collect();
    entries.sort_by(|a, b| a.0.cmp(b.0));
    ConjugatorFile {
        symmetry: v.sym.kind.as_str().to_string(),
        size: v.sym.ambient_dim,
        base: BaseRef::Inline(complex_to_file(&v.base)),
        values: entries
            .into_iter()
            .map(|(point, m)| MorphismSample {
                sample: sample_to_data(point, &v.base),
                matrix: matrix_data(m),
            })
            .collect(),
    }
}

pub fn conjugator_to_canonical_json(v: &Conjugator) -> String {
    let value = serde_json::to_value(conjugator_to_file(v)).expect("schema serializes");
    to_canonical_string(&value)
}

// --- Hamiltonians --------------------------------------------------------

pub fn hamiltonian_to_file(h: &FourierHamiltonian) -> HamiltonianFile {
    HamiltonianFile {
        dimension: h.dimension,
        bands: h.bands,
        symmetry: h.kind.as_str().to_string(),
        coefficients: h
            .coefficients
            .iter()
            .map(|(m, matrix)| CoefficientData { m: m.clone(), matrix: matrix_data(matrix) })
            .collect(),
    }
}

pub fn file_to_hamiltonian(file: &HamiltonianFile) -> Result<FourierHamiltonian> {
    let kind = parse_kind(&file.symmetry)?;
    if file.dimension == 0 || file.dimension > 4 {
        return Err(Error::UnsupportedDimension { d: file.dimension });
    }
    if file.bands == 0 {
        return Err(Error::ParseError("band count must be positive".into()));
    }
    let mut coefficients = BTreeMap::new();
    for entry in &file.coefficients {
        if entry.m.len() != file.dimension {
            return Err(Error::ParseError("lattice vector has the wrong dimension".into()));
        }
        let matrix = parse_matrix(&entry.matrix, file.bands, file.bands)?;
        if coefficients.insert(entry.m.clone(), matrix).is_some() {
            return Err(Error::ParseError(format!("duplicate coefficient at {:?}", entry.m)));
        }
    }
    FourierHamiltonian::new(file.dimension, file.bands, kind, coefficients)
}

pub fn parse_hamiltonian_str(text: &str) -> Result<FourierHamiltonian> {
    file_to_hamiltonian(&parse_json::<HamiltonianFile>(text)?)
}

pub fn hamiltonian_to_canonical_json(h: &FourierHamiltonian) -> String {
    let value = serde_json::to_value(hamiltonian_to_file(h)).expect("schema serializes");
    to_canonical_string(&value)
}

// --- reports to JSON ------------------------------------------------------

pub fn report_to_canonical_json<T: Serialize>(report: &T) -> String {
    let value = serde_json::to_value(report).expect("report serializes");
    to_canonical_string(&value)
}

/// Section values of a trivial embedding, serialized like a morphism value
/// list per section.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingFile {
    pub base: BaseRef,
    pub ambient_dim: usize,
    pub sections: Vec<Vec<MorphismSample>>,
}

pub fn embedding_to_file(
    sections: &[HashMap<SamplePoint, CVector>],
    base: &InvolutiveComplex,
    ambient_dim: usize,
) -> EmbeddingFile {
    EmbeddingFile {
        base: BaseRef::Inline(complex_to_file(base)),
        ambient_dim,
        sections: sections
            .iter()
            .map(|section| {
                let mut entries: Vec<(&SamplePoint, &CVector)> = section.iter().collect();
                entries.sort_by(|a, b| a.0.cmp(b.0));
                entries
                    .into_iter()
                    .map(|(point, value)| MorphismSample {
                        sample: sample_to_data(point, base),
                        matrix: matrix_data(&CMatrix::from_columns(&[value.clone()])),
                    })
                    .collect()
            })
            .collect(),
    }
}

pub fn file_to_embedding(
    file: &EmbeddingFile,
    resolver: &dyn BaseResolver,
) -> Result<(InvolutiveComplex, Vec<HashMap<SamplePoint, CVector>>)> {
    let base = resolve_base(&file.base, resolver)?;
    let mut sections = Vec::with_capacity(file.sections.len());
    for entries in &file.sections {
        let mut section = HashMap::with_capacity(entries.len());
        for entry in entries {
            let point = data_to_sample(&entry.sample, &base)?;
            let matrix = parse_matrix(&entry.matrix, file.ambient_dim, 1)?;
            section.insert(point, CVector::from_column_slice(matrix.as_slice()));
        }
        sections.push(section);
    }
    Ok((base, sections))
}

pub fn parse_embedding_str(
    text: &str,
) -> Result<(InvolutiveComplex, Vec<HashMap<SamplePoint, CVector>>)> {
    file_to_embedding(&parse_json::<EmbeddingFile>(text)?, &NoExternalRefs)
}

pub fn value_of_matrix_for_tests(m: &CMatrix) -> Value {
    matrix_value(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundles::trivial_bundle;
    use crate::symmetry::TrivialBundleSpec;
    use crate::z2complex::{build_torus, TorusInvolution};

    #[test]
    fn complex_round_trips_canonically() {
        let torus = build_torus(2, TorusInvolution::Conjugation).unwrap();
        let text = complex_to_canonical_json(&torus);
        let parsed = parse_complex_str(&text).unwrap();
        assert_eq!(parsed, torus);
        assert_eq!(complex_to_canonical_json(&parsed), text);
    }

    #[test]
    fn bundle_round_trips_with_rank_check() {
        let config = Config::default();
        let base = Arc::new(build_torus(1, TorusInvolution::Conjugation).unwrap());
        let field = trivial_bundle(
            &TrivialBundleSpec::new(SymmetryKind::Real, 1, 2, base).unwrap(),
            &config,
        )
        .unwrap();
        let text = bundle_to_canonical_json(&field);
        let parsed = parse_bundle_str(&text, &config).unwrap();
        assert_eq!(parsed.rank(), 1);
        assert_eq!(bundle_to_canonical_json(&parsed), text);

        let mut broken: BundleFile = serde_json::from_str(&text).unwrap();
        broken.rank = Some(2);
        let rebroken = serde_json::to_string(&broken).unwrap();
        assert!(matches!(
            parse_bundle_str(&rebroken, &config),
            Err(Error::RankMismatch { .. })
        ));
    }

    #[test]
    fn parser_rejects_garbage_without_panicking() {
        let config = Config::default();
        for text in ["", "{", "null", "[1,2,3]", "{\"vertices\": 3}", "{\"vertices\": []}"] {
            assert!(parse_complex_str(text).is_err());
            assert!(parse_bundle_str(text, &config).is_err());
            assert!(parse_witness_str(text, &config).is_err());
            assert!(parse_algebra_element_str(text).is_err());
            assert!(parse_hamiltonian_str(text).is_err());
        }
        let nonfinite = r#"{"dimension":1,"bands":1,"symmetry":"real",
            "coefficients":[{"m":[0],"matrix":[[[1e999,0.0]]]}]}"#;
        assert!(parse_hamiltonian_str(nonfinite).is_err());
    }

    #[test]
    fn morphism_file_round_trips() {
        let config = Config::default();
        let base = Arc::new(build_torus(1, TorusInvolution::Conjugation).unwrap());
        let field = Arc::new(
            trivial_bundle(
                &TrivialBundleSpec::new(SymmetryKind::Real, 1, 2, base).unwrap(),
                &config,
            )
            .unwrap(),
        );
        let phi = BundleMorphism::identity_on(&field);
        let text = morphism_to_canonical_json(&phi);
        let parsed = parse_morphism_str(&text, &config).unwrap();
        assert_eq!(parsed.values.len(), phi.values.len());
        assert_eq!(morphism_to_canonical_json(&parsed), text);
    }
}
