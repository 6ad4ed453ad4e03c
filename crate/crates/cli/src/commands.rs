use std::path::Path;
use std::sync::Arc;

use serde_json::{json, Map, Value};

use qc3d::interp::{
    filter_samples, generate_frames_partial, parse_landmarks, poisson_disk, CubeEmbedding, FrameBoundary,
    InterpolationSchedule, LandmarkMode, SeedingConfig,
};
use qc3d::lbs3d::{reconstruct, BoundaryConditions};
use qc3d::mesh::surface_vertices;
use qc3d::spectral::{
    build_laplace_beltrami, compress, decompress, eigen_mode, eigensolve, spectral_coefficients,
    storage_ratio, truncation_errors, CompressedMapping, Spectrum,
};
use qc3d::{compute_representation, Mapping, Point, TetMesh};

use crate::args::{BoundaryKind, Command, InterpCommand, LandmarkModeArg, MeshArgs};
use crate::config::{Settings, DEFAULT_FRAMES, DEFAULT_KAPPA, DEFAULT_SIGMA};
use crate::io;
use crate::CliError;

pub type Report = Map<String, Value>;

pub fn run(command: &Command, s: &Settings) -> Result<Report, CliError> {
    match command {
        Command::Rep {
            input,
            output,
            permissive,
        } => cmd_rep(input, output, *permissive),
        Command::Reconstruct {
            mesh,
            rep,
            bc,
            boundary,
            truth,
            output,
        } => cmd_reconstruct(s, mesh, rep, bc.as_deref(), *boundary, truth.as_deref(), output),
        Command::Compress {
            input,
            threshold,
            k,
            spectrum,
            boundary,
            sweep_csv,
            output,
        } => cmd_compress(
            s,
            input,
            *threshold,
            *k,
            spectrum.as_deref(),
            *boundary,
            sweep_csv.as_deref(),
            output,
        ),
        Command::Decompress {
            mesh,
            input,
            spectrum,
            truth,
            output,
        } => cmd_decompress(s, mesh, input, spectrum.as_deref(), truth.as_deref(), output),
        Command::Interp(InterpCommand::Seed {
            surface,
            sigma,
            kappa,
            output,
        }) => cmd_seed(s, surface, *sigma, *kappa, output),
        Command::Interp(InterpCommand::Frames {
            input,
            frames,
            landmarks,
            landmark_mode,
            out_dir,
        }) => cmd_frames(s, input, *frames, landmarks.as_deref(), *landmark_mode, out_dir),
        Command::Spectrum {
            input,
            k,
            output,
            csv,
        } => cmd_spectrum(s, input, *k, output.as_deref(), csv.as_deref()),
        Command::Validate { input, bc } => cmd_validate(input, bc.as_deref()),
    }
}

fn to_map(v: Value) -> Report {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("reports are objects"),
    }
}

fn cmd_rep(input: &MeshArgs, output: &Path, permissive: bool) -> Result<Report, CliError> {
    let mapping = io::load_mapping(input)?;
    let rep = compute_representation(&mapping, permissive)?;
    io::save_rep(&rep, output)?;
    Ok(to_map(json!({
        "tets": rep.len(),
        "folded_tets": mapping.folded_tets().len(),
        "output": output.display().to_string(),
    })))
}

fn boundary_from(kind: BoundaryKind, mapping: &Mapping) -> BoundaryConditions {
    match kind {
        BoundaryKind::Faces => BoundaryConditions::cube_faces(mapping),
        BoundaryKind::Surface => BoundaryConditions::surface(mapping),
    }
}

fn load_bc(path: &Path) -> Result<BoundaryConditions, CliError> {
    io::require_file(path)?;
    BoundaryConditions::from_json(&io::read(path)?).map_err(|e| CliError::from(e).context(path))
}

fn cmd_reconstruct(
    s: &Settings,
    mesh_path: &Path,
    rep_path: &Path,
    bc_path: Option<&Path>,
    boundary: Option<BoundaryKind>,
    truth_path: Option<&Path>,
    output: &Path,
) -> Result<Report, CliError> {
    let (mesh, _) = io::load_mesh(mesh_path)?;
    let rep = io::load_rep(rep_path)?;
    let truth = io::load_truth(&mesh, truth_path)?;
    let mut bc = match bc_path {
        Some(p) => load_bc(p)?,
        None => BoundaryConditions::default(),
    };
    if let (Some(kind), Some(t)) = (boundary, &truth) {
        bc = boundary_from(kind, t).merged(&bc);
    }
    let r = reconstruct(mesh, &rep, &bc, &s.cg())?;
    io::save_mapping(&r.mapping, output)?;
    Ok(to_map(
        serde_json::to_value(r.report(truth.as_ref())).expect("report serializes"),
    ))
}

fn compute_spectrum(s: &Settings, mesh: &TetMesh, k: usize) -> Result<Spectrum, CliError> {
    let lb = build_laplace_beltrami(mesh)?;
    Ok(eigensolve(&lb, k, &s.eigen())?)
}

/// Reads the cache when it exists and matches `mesh`; otherwise computes `k`
/// pairs and writes the cache.
fn cached_spectrum(
    s: &Settings,
    mesh: &TetMesh,
    k: usize,
    cache: Option<&Path>,
) -> Result<Spectrum, CliError> {
    if let Some(path) = cache.filter(|p| p.exists()) {
        let sp = Spectrum::from_bytes(&io::read(path)?).map_err(|e| CliError::from(e).context(path))?;
        if sp.mesh_hash != mesh.content_hash() || sp.n() != mesh.n_vertices() {
            return Err(CliError::input(format!(
                "{}: spectrum belongs to another mesh",
                path.display()
            )));
        }
        if sp.k() < k {
            return Err(CliError::input(format!(
                "{}: cache holds {} eigenpairs, {k} needed",
                path.display(),
                sp.k()
            )));
        }
        return Ok(sp);
    }
    let sp = compute_spectrum(s, mesh, k)?;
    if let Some(path) = cache {
        io::write(path, sp.to_bytes())?;
    }
    Ok(sp)
}

fn check_count(name: &str, value: usize, n: usize) -> Result<(), CliError> {
    if value == 0 || value > n {
        return Err(CliError::input(format!(
            "--{name} must be in 1..={n}, got {value}"
        )));
    }
    Ok(())
}

/// Σ over the six components of the discarded `Σ_{i>T} ξᵢ²`.
fn total_truncation(xi: &[Vec<f64>; 6], threshold: usize) -> f64 {
    xi.iter().map(|x| truncation_errors(x)[threshold]).sum()
}

#[allow(clippy::too_many_arguments)]
fn cmd_compress(
    s: &Settings,
    input: &MeshArgs,
    threshold: Option<usize>,
    k: Option<usize>,
    cache: Option<&Path>,
    boundary: BoundaryKind,
    sweep_csv: Option<&Path>,
    output: &Path,
) -> Result<Report, CliError> {
    let mapping = io::load_mapping(input)?;
    let mesh = mapping.source().clone();
    let n = mesh.n_vertices();
    let threshold = s
        .pick(threshold, |f| f.threshold)
        .ok_or_else(|| CliError::input("--threshold is required"))?;
    check_count("threshold", threshold, n)?;
    let k = s.pick(k, |f| f.k).unwrap_or(threshold).max(threshold);
    check_count("k", k, n)?;
    let spectrum = cached_spectrum(s, &mesh, k, cache)?;
    let bc = boundary_from(boundary, &mapping);
    let compressed = compress(&mapping, &spectrum, threshold, &bc)?;
    io::write(output, compressed.to_bytes())?;
    let xi = spectral_coefficients(&mapping, &spectrum)?;

    if let Some(path) = sweep_csv {
        let mut csv = String::from("threshold,storage_ratio,truncation_error,mse,clamped_tets\n");
        let k = spectrum.k();
        let mut thresholds = vec![k, k / 2, k / 4, k / 8];
        thresholds.retain(|&t| t > 0);
        thresholds.dedup();
        for t in thresholds {
            let c = compress(&mapping, &spectrum, t, &bc)?;
            let d = decompress(&c, mesh.clone(), &spectrum, &s.cg())?;
            csv.push_str(&format!(
                "{t},{:?},{:?},{:?},{}\n",
                storage_ratio(t, n),
                total_truncation(&xi, t),
                d.reconstruction.mapping.mean_squared_distance(&mapping),
                d.clamped
            ));
        }
        io::write(path, csv)?;
    }
    Ok(to_map(json!({
        "vertices": n,
        "eigenpairs": spectrum.k(),
        "threshold": threshold,
        "storage_ratio": storage_ratio(threshold, n),
        "truncation_error": total_truncation(&xi, threshold),
        "output": output.display().to_string(),
    })))
}

fn cmd_decompress(
    s: &Settings,
    mesh_path: &Path,
    input: &Path,
    cache: Option<&Path>,
    truth_path: Option<&Path>,
    output: &Path,
) -> Result<Report, CliError> {
    let (mesh, _) = io::load_mesh(mesh_path)?;
    io::require_file(input)?;
    let c = CompressedMapping::from_bytes(&io::read(input)?).map_err(|e| CliError::from(e).context(input))?;
    if c.mesh_hash != mesh.content_hash() {
        return Err(CliError::input(format!(
            "{}: compressed for another mesh",
            input.display()
        )));
    }
    check_count("threshold", c.threshold(), mesh.n_vertices())?;
    let truth = io::load_truth(&mesh, truth_path)?;
    let spectrum = cached_spectrum(s, &mesh, c.threshold(), cache)?;
    let d = decompress(&c, mesh, &spectrum, &s.cg())?;
    io::save_mapping(&d.reconstruction.mapping, output)?;
    let mut report =
        to_map(serde_json::to_value(d.reconstruction.report(truth.as_ref())).expect("report serializes"));
    report.insert("threshold".into(), c.threshold().into());
    report.insert("clamped_tets".into(), d.clamped.into());
    if let Some(t) = &truth {
        report.insert(
            "mse".into(),
            d.reconstruction.mapping.mean_squared_distance(t).into(),
        );
    }
    Ok(report)
}

fn cmd_seed(
    s: &Settings,
    surface: &Path,
    sigma: Option<f64>,
    kappa: Option<f64>,
    output: &Path,
) -> Result<Report, CliError> {
    let cfg = SeedingConfig {
        sigma: s.pick(sigma, |f| f.sigma).unwrap_or(DEFAULT_SIGMA),
        kappa: s.pick(kappa, |f| f.kappa).unwrap_or(DEFAULT_KAPPA),
        seed: s.seed,
    };
    cfg.validate()?;
    let raw = io::load_points(surface)?;
    let embedding = CubeEmbedding::fit(&raw)?;
    let embedded: Vec<Point> = raw.iter().map(|p| embedding.apply(p)).collect();
    let candidates = poisson_disk(Point::zeros(), Point::repeat(1.0), cfg.sigma, 30, cfg.seed)?;
    let kept = filter_samples(&candidates, &embedded, &cfg)?;
    let mut points = embedded;
    points.extend_from_slice(&kept);
    io::save_points(&points, output)?;
    Ok(to_map(json!({
        "surface_points": raw.len(),
        "candidates": candidates.len(),
        "kept": kept.len(),
        "embedding": embedding,
        "output": output.display().to_string(),
    })))
}

fn cmd_frames(
    s: &Settings,
    input: &MeshArgs,
    frames: Option<usize>,
    landmarks: Option<&Path>,
    mode: LandmarkModeArg,
    out_dir: &Path,
) -> Result<Report, CliError> {
    let mapping = io::load_mapping(input)?;
    let frames = s.pick(frames, |f| f.frames).unwrap_or(DEFAULT_FRAMES);
    let schedule = InterpolationSchedule::uniform(frames)?;
    let landmarks = match landmarks {
        Some(p) => {
            io::require_file(p)?;
            let text = String::from_utf8(io::read(p)?)
                .map_err(|_| CliError::input(format!("{}: not UTF-8 text", p.display())))?;
            parse_landmarks(&text).map_err(|e| CliError::from(e).context(p))?
        }
        None => Vec::new(),
    };
    let mode = match mode {
        LandmarkModeArg::Endpoints => LandmarkMode::EndpointsOnly,
        LandmarkModeArg::EveryFrame => LandmarkMode::EveryFrame,
    };
    let rule = FrameBoundary::cube_faces(&mapping).with_landmarks(landmarks, mode);
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::input(format!("{}: {e}", out_dir.display())))?;
    io::save_ele(mapping.source(), &out_dir.join("mesh.ele"))?;

    let results = generate_frames_partial(&mapping, &schedule, &rule, &s.cg())?;
    let mut entries = Vec::new();
    let mut first_error: Option<qc3d::Error> = None;
    let mut folded_frames = 0;
    for (index, result) in results.into_iter().enumerate() {
        let t = schedule.params()[index];
        let file = format!("frame_{index:03}.node");
        match result {
            Ok(frame) => {
                io::save_mapping(&frame.reconstruction.mapping, &out_dir.join(&file))?;
                if !frame.folded_tets.is_empty() {
                    folded_frames += 1;
                    eprintln!(
                        "warning: frame {index} has {} folded tets",
                        frame.folded_tets.len()
                    );
                }
                entries.push(json!({
                    "index": index,
                    "t": t,
                    "file": file,
                    "status": "ok",
                    "folded_tets": frame.folded_tets,
                    "cg_iters": frame.reconstruction.cg.iter().map(|r| r.iterations).collect::<Vec<_>>(),
                }));
            }
            Err(e) => {
                entries.push(json!({
                    "index": index,
                    "t": t,
                    "status": "failed",
                    "error": e.to_string(),
                }));
                first_error.get_or_insert(e);
            }
        }
    }
    let status = if first_error.is_some() {
        "partial"
    } else {
        "complete"
    };
    let manifest = json!({
        "status": status,
        "mesh": input.mesh.display().to_string(),
        "ele": "mesh.ele",
        "schedule": schedule.params(),
        "seed": s.seed,
        "landmark_mode": mode,
        "landmarks": rule.landmarks.len(),
        "frames": entries,
    });
    io::write(
        &out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    if let Some(e) = first_error {
        return Err(e.into());
    }
    Ok(to_map(json!({
        "frames": frames,
        "folded_frames": folded_frames,
        "out_dir": out_dir.display().to_string(),
    })))
}

fn cmd_spectrum(
    s: &Settings,
    input: &MeshArgs,
    k: Option<usize>,
    output: Option<&Path>,
    csv: Option<&Path>,
) -> Result<Report, CliError> {
    let (mesh, embedded) = io::load_mesh(&input.mesh)?;
    let images = match &input.images {
        Some(p) => Some(io::load_points(p)?),
        None => embedded,
    };
    let n = mesh.n_vertices();
    let k = s
        .pick(k, |f| f.k)
        .ok_or_else(|| CliError::input("--k is required"))?;
    check_count("k", k, n)?;
    let spectrum = compute_spectrum(s, &mesh, k)?;
    if let Some(path) = output {
        io::write(path, spectrum.to_bytes())?;
    }
    if let Some(path) = csv {
        let xi = match images {
            Some(im) => Some(spectral_coefficients(
                &Mapping::new(mesh.clone(), im)?,
                &spectrum,
            )?),
            None => None,
        };
        let mut out = String::from("index,lambda,residual");
        if xi.is_some() {
            out.push_str(",xi_q11,xi_q12,xi_q13,xi_q22,xi_q23,xi_q33");
        }
        out.push('\n');
        for i in 0..spectrum.k() {
            out.push_str(&format!(
                "{i},{:?},{:?}",
                spectrum.values[i], spectrum.residuals[i]
            ));
            if let Some(xi) = &xi {
                for c in xi {
                    out.push_str(&format!(",{:?}", c[i]));
                }
            }
            out.push('\n');
        }
        io::write(path, out)?;
    }
    let max_residual = spectrum.residuals.iter().copied().fold(0.0, f64::max);
    Ok(to_map(json!({
        "vertices": n,
        "eigenpairs": k,
        "mode": format!("{:?}", eigen_mode(n, k)),
        "lambda_min": spectrum.values[0],
        "lambda_max": spectrum.values[k - 1],
        "max_residual": max_residual,
    })))
}

fn cmd_validate(input: &MeshArgs, bc: Option<&Path>) -> Result<Report, CliError> {
    let (mesh, embedded) = io::load_mesh(&input.mesh)?;
    let (lo, hi) = mesh.bounding_box();
    let mut report = to_map(json!({
        "vertices": mesh.n_vertices(),
        "tets": mesh.n_tets(),
        "reoriented_tets": mesh.repaired_tets().len(),
        "surface_vertices": surface_vertices(&mesh).len(),
        "volume": mesh.total_volume(),
        "bounding_box": [[lo.x, lo.y, lo.z], [hi.x, hi.y, hi.z]],
    }));
    let images = match &input.images {
        Some(p) => Some(io::load_points(p)?),
        None => embedded,
    };
    if let Some(images) = images {
        let mapping = Mapping::new(Arc::clone(&mesh), images)?;
        mapping.check_diffeomorphic()?;
        report.insert("diffeomorphic".into(), true.into());
    }
    if let Some(path) = bc {
        load_bc(path)?.validate(mesh.n_vertices())?;
        report.insert("boundary".into(), "valid".into());
    }
    Ok(report)
}
