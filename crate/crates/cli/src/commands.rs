//! One function per subcommand. Each resolves its arguments, computes every
//! output in memory, and returns an [`Outcome`]; nothing touches the disk
//! until the caller commits.

use std::path::{Path, PathBuf};

use neurogeom::dti::{self, tracts::TRACT_MAGIC, TensorField};
use neurogeom::imgio::{self, Datatype, Format, Volume3D, VolumeHeader, VoxelData};
use neurogeom::isosurface;
use neurogeom::meshio::{self, VertexScalar};
use neurogeom::meshtopo;
use neurogeom::morpho::{self, SurfaceEnsemble};
use neurogeom::register::{self, LandmarkSet};
use neurogeom::volops::{self, BinaryMask, Connectivity, GmmParams};

use crate::error::{exit, read_error, CliError, Result};
use crate::manifest::{ManifestFile, Resolver};
use crate::{Command, Outcome, TractsCommand};

pub fn dispatch(command: Command, file: &ManifestFile, base: PathBuf) -> Result<Outcome> {
    let r = Resolver::new(command.name(), file, base)?;
    match command {
        Command::Info { input } => info(r, input),
        Command::Volume { input } => volume(r, input),
        Command::FixTopology {
            input,
            radius,
            connectivity,
            out,
        } => fix_topology(r, input, radius, connectivity, out),
        Command::ExtractSurface {
            input,
            iso,
            pad,
            swap_xy,
            out,
        } => extract_surface(r, input, iso, pad, swap_xy, out),
        Command::CheckTopology { input } => check_topology(r, input),
        Command::Register {
            moving,
            fixed,
            rigid,
            out,
            apply,
            out_mesh,
        } => register(r, moving, fixed, rigid, out, apply, out_mesh),
        Command::Template { ensemble, out } => template(r, ensemble, out),
        Command::Displacement {
            ensemble,
            subject,
            template,
            out,
        } => displacement(r, ensemble, subject, template, out),
        Command::Fa { tensors, out } => fa(r, tensors, out),
        Command::Tracts {
            action:
                TractsCommand::Subsample {
                    input,
                    output,
                    stride,
                    min_points,
                },
        } => tracts_subsample(r, input, output, stride, min_points),
        Command::Tracts {
            action: TractsCommand::Endpoints { input, out },
        } => tracts_endpoints(r, input, out),
        Command::Segment {
            input,
            classes,
            max_iters,
            tol,
            out,
        } => segment(r, input, classes, max_iters, tol, out),
    }
}

/// Ends argument resolution: rejects unused manifest keys and missing
/// inputs.
fn start(r: Resolver) -> Result<Outcome> {
    r.finish()?;
    Ok(Outcome::default())
}

/// Voxel sizes are float32 on disk; print them at that precision.
fn f32_value(x: f64) -> f64 {
    (x as f32).to_string().parse().unwrap_or(x)
}

fn volume_files(path: &Path, vol: &Volume3D) -> Result<Vec<(PathBuf, Vec<u8>)>> {
    if path.extension().and_then(|e| e.to_str()) == Some("nii") {
        let vol = vol.clone().with_format(Format::Nifti1);
        return Ok(vec![(path.to_path_buf(), imgio::write_nifti1(&vol)?)]);
    }
    let (hdr_path, img_path) = imgio::analyze_pair_paths(path);
    let (hdr, img) = imgio::write_analyze(&vol.clone().with_format(Format::Analyze75))?;
    Ok(vec![(hdr_path, hdr), (img_path, img)])
}

fn add_volume(outcome: &mut Outcome, path: &Path, vol: &Volume3D) -> Result<()> {
    for (p, bytes) in volume_files(path, vol)? {
        outcome.outputs.add(p, bytes);
    }
    Ok(())
}

fn info(mut r: Resolver, input: Option<PathBuf>) -> Result<Outcome> {
    let input = r.input("input", input)?;
    let mut out = start(r)?;
    let h = imgio::read_header_file(&input)?;
    out.summary
        .put("format", h.format.name())
        .put("dims", h.dims.to_vec())
        .put("voxel_size", h.voxel_size.map(f32_value).to_vec())
        .put("datatype", h.datatype.name())
        .put("bitpix", h.datatype.bytes() * 8)
        .put("endianness", h.endianness.name())
        .put("description", h.description.clone());
    Ok(out)
}

fn volume(mut r: Resolver, input: Option<PathBuf>) -> Result<Outcome> {
    let input = r.input("input", input)?;
    let mut out = start(r)?;
    let mask = BinaryMask::from_volume(&imgio::read_volume_file(&input)?);
    let (voxels, mm3) = volops::measure_volume(&mask);
    out.summary
        .put("voxels", voxels)
        .put("voxel_size", mask.voxel_size().map(f32_value).to_vec())
        .put("volume_mm3", mm3);
    Ok(out)
}

fn connectivity(n: u32) -> Result<Connectivity> {
    Connectivity::from_count(n).ok_or_else(|| CliError::Usage(format!("connectivity must be 6, 18 or 26, got {n}")))
}

fn fix_topology(
    mut r: Resolver,
    input: Option<PathBuf>,
    radius: Option<usize>,
    conn: Option<u32>,
    out_path: Option<PathBuf>,
) -> Result<Outcome> {
    let input = r.input("input", input)?;
    let radius = r.param_or("radius", radius, 1usize)?;
    let conn = connectivity(r.param_or("connectivity", conn, 6u32)?)?;
    let out_path = r.output("out", out_path)?;
    let mut out = start(r)?;

    let mask = BinaryMask::from_volume(&imgio::read_volume_file(&input)?);
    let labels = volops::connected_components(&mask, conn);
    let largest = volops::largest_component(&mask, conn)?;
    let fixed = volops::morphological_close(&largest, radius);
    let (voxels, mm3) = volops::measure_volume(&fixed);
    add_volume(&mut out, &out_path, &fixed.to_volume())?;
    out.summary
        .put("components", labels.label_count())
        .put("voxels_before", mask.count())
        .put("voxels", voxels)
        .put("volume_mm3", mm3);
    Ok(out)
}

fn extract_surface(
    mut r: Resolver,
    input: Option<PathBuf>,
    iso: Option<f64>,
    pad: Option<usize>,
    swap_xy: bool,
    out_path: Option<PathBuf>,
) -> Result<Outcome> {
    let input = r.input("input", input)?;
    let iso = r.param_or("iso", iso, 0.5)?;
    let pad = r.param_or("pad", pad, 0usize)?;
    let swap = r.switch("swap-xy", swap_xy)?;
    let out_path = r.output("out", out_path)?;
    let mut out = start(r)?;

    let vol = imgio::read_volume_file(&input)?;
    let mut mesh = isosurface::marching_cubes_padded(&vol, iso, pad)?;
    if swap {
        mesh = isosurface::swap_xy(&mesh);
    }
    let report = meshtopo::validate(&mesh)?;
    if !report.is_closed() {
        out.warnings
            .push(format!("surface is open ({} boundary edges); try --pad 1", report.boundary_edges));
    }
    out.outputs.add(out_path.clone(), meshio::mesh_bytes_for_path(&out_path, &mesh, &[])?);
    out.summary
        .put("vertices", report.vertices)
        .put("faces", report.faces)
        .put("chi", report.chi)
        .put("closed", report.is_closed());
    Ok(out)
}

fn check_topology(mut r: Resolver, input: Option<PathBuf>) -> Result<Outcome> {
    let input = r.input("input", input)?;
    let mut out = start(r)?;
    let mesh = meshio::read_mesh_file(&input)?.mesh;
    mesh.check_indices().map_err(CliError::Parse)?;
    let t = meshtopo::validate(&mesh)?;
    out.summary
        .put("vertices", t.vertices)
        .put("edges", t.edges)
        .put("faces", t.faces)
        .put("chi", t.chi)
        .put("boundary_edges", t.boundary_edges)
        .put("nonmanifold_edges", t.nonmanifold_edges)
        .put("components", t.components)
        .put("genus", t.genus.or(t.total_genus()))
        .put("sphere", t.is_sphere);
    out.code = if t.is_sphere { exit::OK } else { exit::NOT_SPHERE };
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn register(
    mut r: Resolver,
    moving: Option<PathBuf>,
    fixed: Option<PathBuf>,
    rigid: bool,
    out_path: Option<PathBuf>,
    apply: Option<PathBuf>,
    out_mesh: Option<PathBuf>,
) -> Result<Outcome> {
    let moving = r.input("moving", moving)?;
    let fixed = r.input("fixed", fixed)?;
    let rigid = r.switch("rigid", rigid)?;
    let out_path = r.output("out", out_path)?;
    let apply = r.optional_input("apply", apply);
    let out_mesh = r.optional_output("out-mesh", out_mesh);
    if apply.is_some() != out_mesh.is_some() {
        return Err(CliError::Usage("--apply and --out-mesh must be given together".into()));
    }
    let mut out = start(r)?;

    let p = LandmarkSet::read_csv_file(&moving)?;
    let q = LandmarkSet::read_csv_file(&fixed)?;
    let a = if rigid {
        register::estimate_rigid(&p, &q)?
    } else {
        register::estimate_affine(&p, &q)?
    };
    let res = register::registration_residual(&a, &p, &q)?;
    out.outputs.add(out_path, a.to_text());
    if let (Some(mesh_in), Some(mesh_out)) = (apply, out_mesh) {
        let ply = meshio::read_mesh_file(&mesh_in)?;
        let moved = register::apply_affine_mesh(&a, &ply.mesh);
        out.outputs
            .add(mesh_out.clone(), meshio::mesh_bytes_for_path(&mesh_out, &moved, &ply.scalars)?);
    }
    out.summary
        .put("model", if rigid { "rigid" } else { "affine" })
        .put("landmarks", p.len())
        .put("rms", res.rms)
        .put("max_residual", res.per_landmark.iter().fold(0.0f64, |m, &x| m.max(x)))
        .put("det", a.linear().determinant());
    Ok(out)
}

fn template(mut r: Resolver, ensemble: Option<PathBuf>, out_path: Option<PathBuf>) -> Result<Outcome> {
    let ensemble = r.input("ensemble", ensemble)?;
    let out_path = r.output("out", out_path)?;
    let mut out = start(r)?;
    let ens = SurfaceEnsemble::read_file(&ensemble)?;
    let mesh = morpho::average_template(&ens)?;
    out.outputs.add(out_path.clone(), meshio::mesh_bytes_for_path(&out_path, &mesh, &[])?);
    out.summary
        .put("subjects", ens.subject_count())
        .put("vertices", mesh.vertex_count())
        .put("faces", mesh.face_count());
    Ok(out)
}

fn displacement(
    mut r: Resolver,
    ensemble: Option<PathBuf>,
    subject: Option<usize>,
    template: Option<PathBuf>,
    out_path: Option<PathBuf>,
) -> Result<Outcome> {
    let ensemble = r.input("ensemble", ensemble)?;
    let subject = r
        .param("subject", subject)?
        .ok_or_else(|| CliError::Usage("missing required parameter 'subject'".into()))?;
    let template = r.input("template", template)?;
    let out_path = r.output("out", out_path)?;
    let mut out = start(r)?;

    let ens = SurfaceEnsemble::read_file(&ensemble)?;
    let tmpl = meshio::read_mesh_file(&template)?.mesh;
    let d = morpho::displacement_field(&ens, &tmpl, subject)?;
    let channel = |k: usize| d.vectors.iter().map(|v| v[k]).collect::<Vec<_>>();
    let scalars = [
        VertexScalar::new("dx", channel(0)),
        VertexScalar::new("dy", channel(1)),
        VertexScalar::new("dz", channel(2)),
        VertexScalar::new("quality", d.lengths.clone()),
    ];
    out.outputs
        .add(out_path.clone(), meshio::mesh_bytes_for_path(&out_path, &tmpl, &scalars)?);
    let n = d.lengths.len().max(1) as f64;
    out.summary
        .put("subject", ens.subject_ids()[subject].clone())
        .put("vertices", d.lengths.len())
        .put("mean_length", d.lengths.iter().sum::<f64>() / n)
        .put("max_length", d.lengths.iter().fold(0.0f64, |m, &x| m.max(x)));
    Ok(out)
}

fn fa(mut r: Resolver, tensors: Vec<PathBuf>, out_path: Option<PathBuf>) -> Result<Outcome> {
    let tensors = r.inputs("tensors", tensors);
    if tensors.len() != 6 {
        return Err(CliError::Usage(format!(
            "--tensors needs 6 volumes (dxx dyy dzz dxy dxz dyz), got {}",
            tensors.len()
        )));
    }
    let out_path = r.output("out", out_path)?;
    let mut out = start(r)?;

    let vols = tensors
        .iter()
        .map(|p| imgio::read_volume_file(p))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let field = TensorField::from_volumes(std::array::from_fn(|k| &vols[k]))?;
    let map = dti::fa_map(&field)?;
    if map.negative_voxels > 0 {
        out.warnings.push(format!(
            "{} voxels have a negative eigenvalue; their FA is not clamped",
            map.negative_voxels
        ));
    }
    add_volume(&mut out, &out_path, &map.map)?;
    out.summary
        .put("dims", field.dims().to_vec())
        .put("voxels", field.len())
        .put("negative_voxels", map.negative_voxels);
    Ok(out)
}

fn tracts_subsample(
    mut r: Resolver,
    input: Option<PathBuf>,
    output: Option<PathBuf>,
    stride: Option<usize>,
    min_points: Option<usize>,
) -> Result<Outcome> {
    let input = r.input("input", input)?;
    let output = r.output("output", output)?;
    let stride = r.param_or("stride", stride, 1usize)?;
    let min_points = r.param_or("min-points", min_points, 0usize)?;
    if stride == 0 {
        return Err(CliError::Usage("stride must be at least 1".into()));
    }
    let mut out = start(r)?;

    let bytes = std::fs::read(&input).map_err(|e| read_error(&input, e))?;
    let tracts = dti::parse_tracts(&bytes)?;
    let kept = dti::subsample_tracts(&tracts, stride, min_points);
    let encoded = if bytes.starts_with(TRACT_MAGIC) {
        dti::tracts_to_binary(&kept)
    } else {
        dti::tracts_to_text(&kept).into_bytes()
    };
    out.outputs.add(output, encoded);
    out.summary
        .put("tracts_in", tracts.len())
        .put("tracts_out", kept.len())
        .put("points_out", kept.iter().map(|t| t.len()).sum::<usize>());
    Ok(out)
}

fn tracts_endpoints(mut r: Resolver, input: Option<PathBuf>, out_path: Option<PathBuf>) -> Result<Outcome> {
    let input = r.input("input", input)?;
    let out_path = r.output("out", out_path)?;
    let mut out = start(r)?;
    let tracts = dti::load_tracts(&input)?;
    let ends = dti::tract_endpoints(&tracts);
    let mut csv = String::from("tract,end,x,y,z\n");
    for e in &ends {
        let [x, y, z] = e.point;
        csv.push_str(&format!("{},{},{x:?},{y:?},{z:?}\n", e.tract, e.end.name()));
    }
    out.outputs.add(out_path, csv);
    out.summary.put("tracts", tracts.len()).put("endpoints", ends.len());
    Ok(out)
}

/// `prefix` with any volume extension removed.
fn strip_volume_ext(path: &Path) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some("hdr" | "img" | "nii") => path.with_extension(""),
        _ => path.to_path_buf(),
    }
}

fn segment(
    mut r: Resolver,
    input: Option<PathBuf>,
    classes: Option<usize>,
    max_iters: Option<usize>,
    tol: Option<f64>,
    out_path: Option<PathBuf>,
) -> Result<Outcome> {
    let defaults = GmmParams::default();
    let input = r.input("input", input)?;
    let params = GmmParams {
        classes: r.param_or("classes", classes, defaults.classes)?,
        max_iters: r.param_or("max-iters", max_iters, defaults.max_iters)?,
        tol: r.param_or("tol", tol, defaults.tol)?,
    };
    let prefix = strip_volume_ext(&r.output("out", out_path)?);
    let mut out = start(r)?;

    let vol = imgio::read_volume_file(&input)?;
    let post = volops::gmm_segment(&vol, params)?;
    let [nx, ny, nz] = post.dims;
    let values = vol.spatial_values();
    let labels: Vec<u8> = post
        .hard_labels()
        .into_iter()
        .zip(&values)
        .map(|(k, &v)| if v == 0.0 { 0 } else { (k + 1).min(255) as u8 })
        .collect();
    let header = |dt| VolumeHeader::new([nx, ny, nz, 1], vol.voxel_size(), dt);
    let label_vol = Volume3D::new(header(Datatype::U8), VoxelData::U8(labels))?;
    add_volume(&mut out, &prefix, &label_vol)?;
    for (k, p) in post.posteriors.iter().enumerate() {
        let mut name = prefix.as_os_str().to_owned();
        name.push(format!("_p{k}.nii"));
        let pv = Volume3D::new(header(Datatype::F64), VoxelData::F64(p.clone()))?;
        add_volume(&mut out, Path::new(&name), &pv)?;
    }
    out.summary
        .put("classes", post.class_count())
        .put("fitted_voxels", post.fitted_voxels)
        .put("means", post.means.clone())
        .put("variances", post.variances.clone())
        .put("weights", post.weights.clone())
        .put("iterations", post.iterations)
        .put("converged", post.converged)
        .put("log_likelihood", post.log_likelihoods.last().copied());
    Ok(out)
}
