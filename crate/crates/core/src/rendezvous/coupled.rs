use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use super::partition::{group, AppPartition, RdvPartition};
use super::routing::{exchange, plan_reverse, Mailboxes, Payload, RoutingPlan};
use super::{CouplingStats, RdvError, Role, StatsRow, Traffic};
use crate::conservative::{
    assemble_system, clip_pair, element_values, finish, pair_contribution, sliver_threshold, ConservativeOptions,
    PairContribution, PairInput, PairRules,
};
use crate::mesh::{BBox, DofLocation, Field, Mesh, Point2, Shape};
use crate::pointwise::{fit_support, monomial_count, select_support_bounded, Bounded, FitError, FitSpec, Selection, SourceIndex};
use crate::Exec;

/// Transfer method run on the rendezvous ranks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoupledMethod {
    /// Local polynomial fits evaluated at the target layout's dof points.
    Pointwise { spec: FitSpec, target: DofLocation },
    Conservative(ConservativeOptions),
}

#[derive(Debug, Clone)]
pub struct CoupledResult {
    pub field: Field,
    pub stats: CouplingStats,
    /// Number of source exchanges the pointwise path needed to cover every support.
    pub halo_rounds: usize,
}

#[derive(Default)]
struct Recorder {
    rows: BTreeMap<(usize, Role, usize), Traffic>,
    rounds: usize,
}

impl Recorder {
    fn add<T: Payload>(&mut self, round: usize, from: Role, to: Role, mb: &Mailboxes<T>) {
        let (sent, recv) = mb.traffic();
        for (rank, t) in sent.into_iter().enumerate() {
            let e = self.rows.entry((round, from, rank)).or_default();
            e.msgs_sent += t.msgs_sent;
            e.bytes_sent += t.bytes_sent;
        }
        for (rank, t) in recv.into_iter().enumerate() {
            let e = self.rows.entry((round, to, rank)).or_default();
            e.msgs_recv += t.msgs_recv;
            e.bytes_recv += t.bytes_recv;
        }
        self.rounds = self.rounds.max(round + 1);
    }

    fn finish(self, n_a: usize, n_b: usize, n_rdv: usize) -> CouplingStats {
        let mut rows = Vec::new();
        for round in 0..self.rounds {
            for (role, n) in [(Role::AppA, n_a), (Role::AppB, n_b), (Role::Rdv, n_rdv)] {
                for rank in 0..n {
                    let traffic = self.rows.get(&(round, role, rank)).copied().unwrap_or_default();
                    rows.push(StatsRow { round, rank, role, traffic });
                }
            }
        }
        CouplingStats { rows }
    }
}

fn run_ranks<R: Send>(n: usize, exec: Exec, f: impl Fn(usize) -> R + Sync + Send) -> Vec<R> {
    match exec {
        Exec::Serial => (0..n).map(f).collect(),
        Exec::Parallel => (0..n).into_par_iter().map(f).collect(),
    }
}

fn check_inside(rdv: &RdvPartition, mesh: &Mesh) -> Result<(), RdvError> {
    let b = mesh.bbox();
    for p in [b.min, b.max] {
        if !rdv.bbox().contains(p) {
            return Err(RdvError::OutsideRendezvous(p));
        }
    }
    Ok(())
}

/// Couples application A, which owns `source` under partition `a`, with application B,
/// which owns `target` under partition `b`, through the rendezvous partition `rdv`.
///
/// The returned field equals the serial transfer of the same method: pointwise results
/// are bitwise identical to [`crate::pointwise::transfer_pointwise`] and conservative
/// results to [`crate::conservative::transfer_conservative`].
pub fn coupled_transfer(
    source: &Field,
    a: &AppPartition,
    target: &Arc<Mesh>,
    b: &AppPartition,
    rdv: &RdvPartition,
    method: &CoupledMethod,
    exec: Exec,
) -> Result<CoupledResult, RdvError> {
    if a.elem_owners().len() != source.mesh().n_elems() || b.elem_owners().len() != target.n_elems() {
        return Err(RdvError::InvalidPartition("partition does not match its mesh".into()));
    }
    match method {
        CoupledMethod::Pointwise { spec, target: location } => pointwise(source, a, target, *location, b, rdv, spec, exec),
        CoupledMethod::Conservative(opts) => conservative(source, a, target, b, rdv, opts, exec),
    }
}

enum Outcome {
    Value(f64),
    Needs(f64),
    Failed(FitError),
}

/// Fits the pending targets of one rendezvous rank from the sources it holds, which cover
/// every source within `known` of each of its targets.
fn fit_rank(
    sources: &[(usize, [f64; 3])],
    targets: &[(usize, Point2)],
    spec: &FitSpec,
    known: f64,
) -> Vec<(usize, Outcome)> {
    if sources.is_empty() {
        let needed = monomial_count(spec.degree);
        return targets
            .iter()
            .map(|&(id, _)| {
                let o = match spec.selection {
                    _ if known.is_infinite() => Outcome::Failed(FitError::NoSources),
                    Selection::FixedRadius { cutoff } if cutoff <= known => {
                        Outcome::Failed(FitError::Underdetermined { found: 0, needed, radius: cutoff })
                    }
                    _ => Outcome::Needs(2.0 * known),
                };
                (id, o)
            })
            .collect();
    }
    let pts: Vec<Point2> = sources.iter().map(|(_, v)| Point2::new(v[1], v[2])).collect();
    let vals: Vec<f64> = sources.iter().map(|(_, v)| v[0]).collect();
    let index = SourceIndex::from_points(pts).expect("nonempty");
    targets
        .iter()
        .map(|&(id, t)| {
            let o = match select_support_bounded(&index, t, &spec.selection, &spec.basis, spec.degree, known) {
                Ok(Bounded::Found(s)) => match fit_support(index.points(), &vals, &s, t, spec) {
                    Ok(v) => Outcome::Value(v),
                    Err(e) => Outcome::Failed(e),
                },
                Ok(Bounded::NeedsRadius(r)) => Outcome::Needs(r),
                Err(e) => Outcome::Failed(e),
            };
            (id, o)
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn pointwise(
    source: &Field,
    a: &AppPartition,
    target: &Arc<Mesh>,
    location: DofLocation,
    b: &AppPartition,
    rdv: &RdvPartition,
    spec: &FitSpec,
    exec: Exec,
) -> Result<CoupledResult, RdvError> {
    spec.validate().map_err(|source| RdvError::Fit { target: 0, source })?;
    let mut known = match spec.selection {
        Selection::FixedRadius { cutoff } => cutoff,
        Selection::AdaptiveRadius { initial_radius, .. } => initial_radius,
        Selection::ElementPatch { .. } => {
            return Err(RdvError::Unsupported("element patch selection needs the whole source mesh".into()))
        }
    };
    let n_rdv = rdv.n_ranks();
    let mut rec = Recorder::default();

    // B announces its target points to the rendezvous owners.
    let tgt_pts = location.points(target);
    let tgt_plan = RoutingPlan::to_owners(b.owned_dofs(target, location), &tgt_pts, rdv)?;
    let tgt_payload: Vec<Vec<[f64; 2]>> =
        tgt_plan.src_layout().iter().map(|l| l.iter().map(|&k| [tgt_pts[k].x, tgt_pts[k].y]).collect()).collect();
    let tgt_mail = exchange(&tgt_plan, &tgt_payload)?;
    rec.add(0, Role::AppB, Role::Rdv, &tgt_mail);
    let rdv_targets: Vec<Vec<(usize, Point2)>> = (0..n_rdv)
        .map(|r| {
            tgt_plan.dst_layout()[r].iter().zip(tgt_mail.values(r)).map(|(&k, v)| (k, Point2::new(v[0], v[1]))).collect()
        })
        .collect();

    // Beyond this halo every source reaches every rendezvous cell.
    let src_mesh = source.mesh();
    let src_loc = source.location();
    let src_pts = src_loc.points(src_mesh);
    let mut reach_box = rdv.bbox();
    for p in &src_pts {
        reach_box.include(*p);
    }
    let full = reach_box.width().hypot(reach_box.height());
    let src_layout = a.owned_dofs(src_mesh, src_loc);

    let mut results: Vec<Vec<Option<Result<f64, FitError>>>> =
        rdv_targets.iter().map(|t| vec![None; t.len()]).collect();
    let mut round = 0;
    loop {
        if known >= full {
            known = f64::INFINITY;
        }
        let plan = RoutingPlan::multicast(src_layout.clone(), n_rdv, |s| Ok(rdv.owners_within(src_pts[s], known)))?;
        let payload: Vec<Vec<[f64; 3]>> = plan
            .src_layout()
            .iter()
            .map(|l| l.iter().map(|&k| [source.values()[k], src_pts[k].x, src_pts[k].y]).collect())
            .collect();
        let mail = exchange(&plan, &payload)?;
        rec.add(round, Role::AppA, Role::Rdv, &mail);

        let outcomes = run_ranks(n_rdv, exec, |r| {
            let mut local: Vec<(usize, [f64; 3])> =
                plan.dst_layout()[r].iter().copied().zip(mail.values(r).iter().copied()).collect();
            local.sort_by_key(|&(id, _)| id);
            let pending: Vec<(usize, Point2)> = rdv_targets[r]
                .iter()
                .enumerate()
                .filter(|(i, _)| results[r][*i].is_none())
                .map(|(i, &(_, p))| (i, p))
                .collect();
            fit_rank(&local, &pending, spec, known)
        });
        let mut needed: f64 = 0.0;
        for (r, outs) in outcomes.into_iter().enumerate() {
            for (i, o) in outs {
                match o {
                    Outcome::Value(v) => results[r][i] = Some(Ok(v)),
                    Outcome::Failed(e) => results[r][i] = Some(Err(e)),
                    Outcome::Needs(h) => needed = needed.max(h),
                }
            }
        }
        round += 1;
        if needed == 0.0 {
            break;
        }
        known = needed.max(2.0 * known);
    }

    // The lowest failing target is reported, as in the serial path.
    let mut first_err: Option<(usize, FitError)> = None;
    let mut back: Vec<Vec<f64>> = Vec::with_capacity(n_rdv);
    for (r, res) in results.into_iter().enumerate() {
        let mut vals = Vec::with_capacity(res.len());
        for (i, x) in res.into_iter().enumerate() {
            match x.expect("every target resolved") {
                Ok(v) => vals.push(v),
                Err(e) => {
                    let id = rdv_targets[r][i].0;
                    if first_err.as_ref().is_none_or(|(k, _)| id < *k) {
                        first_err = Some((id, e));
                    }
                    vals.push(f64::NAN);
                }
            }
        }
        back.push(vals);
    }
    if let Some((target, source)) = first_err {
        return Err(RdvError::Fit { target, source });
    }

    let reverse = plan_reverse(&tgt_plan);
    let mail = exchange(&reverse, &back)?;
    rec.add(round, Role::Rdv, Role::AppB, &mail);
    let mut out = vec![0.0; location.count(target)];
    for (layout, vals) in reverse.dst_layout().iter().zip(mail.into_buffers()) {
        for (&k, v) in layout.iter().zip(vals) {
            out[k] = v;
        }
    }
    let shape = match location {
        DofLocation::Vertices => Shape::Linear,
        DofLocation::Centroids => Shape::Constant,
    };
    Ok(CoupledResult {
        field: Field::new(target.clone(), shape, out)?,
        stats: rec.finish(a.n_ranks(), b.n_ranks(), n_rdv),
        halo_rounds: round,
    })
}

/// Bounding-box bins over one rank's source triangles.
struct BoxBins {
    bbox: BBox,
    n: usize,
    bins: Vec<Vec<usize>>,
}

impl BoxBins {
    fn new(boxes: &[BBox]) -> Option<BoxBins> {
        let mut bbox = *boxes.first()?;
        for b in boxes {
            bbox.include(b.min);
            bbox.include(b.max);
        }
        let n = ((boxes.len() as f64).sqrt().ceil() as usize).max(1);
        let mut bins = BoxBins { bbox, n, bins: vec![Vec::new(); n * n] };
        for (k, b) in boxes.iter().enumerate() {
            let (i0, j0, i1, j1) = bins.range(b);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    bins.bins[j * n + i].push(k);
                }
            }
        }
        Some(bins)
    }

    fn axis(&self, v: f64, lo: f64, w: f64) -> usize {
        if w <= 0.0 {
            return 0;
        }
        (((v - lo) / w * self.n as f64).floor().max(0.0) as usize).min(self.n - 1)
    }

    fn range(&self, b: &BBox) -> (usize, usize, usize, usize) {
        let (w, h) = (self.bbox.width(), self.bbox.height());
        (
            self.axis(b.min.x, self.bbox.min.x, w),
            self.axis(b.min.y, self.bbox.min.y, h),
            self.axis(b.max.x, self.bbox.min.x, w),
            self.axis(b.max.y, self.bbox.min.y, h),
        )
    }

    fn candidates(&self, b: &BBox) -> Vec<usize> {
        if !b.overlaps(&self.bbox) {
            return Vec::new();
        }
        let (i0, j0, i1, j1) = self.range(b);
        let mut out: Vec<usize> = (j0..=j1).flat_map(|j| (i0..=i1).flat_map(move |i| self.bins[j * self.n + i].iter().copied())).collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

fn tri_of(v: &[f64]) -> [Point2; 3] {
    [Point2::new(v[0], v[1]), Point2::new(v[2], v[3]), Point2::new(v[4], v[5])]
}

fn bbox_of(t: &[Point2; 3]) -> BBox {
    BBox::from_points(t).expect("three points")
}

fn pack(c: &PairContribution) -> [f64; 16] {
    let mut v = [0.0; 16];
    v[0] = c.target_elem as f64;
    v[1] = c.source_elem as f64;
    v[2] = c.area;
    v[3] = c.source_integral;
    for a in 0..3 {
        for b in 0..3 {
            v[4 + 3 * a + b] = c.mass[a][b];
        }
    }
    v[13..16].copy_from_slice(&c.rhs);
    v
}

fn unpack(v: &[f64; 16]) -> PairContribution {
    let mut mass = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            mass[a][b] = v[4 + 3 * a + b];
        }
    }
    PairContribution {
        target_elem: v[0] as usize,
        source_elem: v[1] as usize,
        area: v[2],
        source_integral: v[3],
        mass,
        rhs: [v[13], v[14], v[15]],
    }
}

fn conservative(
    source: &Field,
    a: &AppPartition,
    target: &Arc<Mesh>,
    b: &AppPartition,
    rdv: &RdvPartition,
    opts: &ConservativeOptions,
    exec: Exec,
) -> Result<CoupledResult, RdvError> {
    let src_mesh = source.mesh();
    check_inside(rdv, src_mesh)?;
    check_inside(rdv, target)?;
    let n_rdv = rdv.n_ranks();
    let shape = opts.target_shape;
    let rules = PairRules::new(source.shape(), shape).map_err(crate::conservative::ConservativeError::from)?;
    let sliver = sliver_threshold(src_mesh, target);
    let mut rec = Recorder::default();

    // Round 0: both applications send whole elements to every rank whose cells their
    // bounding boxes touch.
    let src_plan = RoutingPlan::multicast(group(a.elem_owners(), a.n_ranks()), n_rdv, |e| {
        Ok(rdv.owners_overlapping(&src_mesh.element_bbox(e)))
    })?;
    let src_payload: Vec<Vec<[f64; 9]>> = src_plan
        .src_layout()
        .iter()
        .map(|l| {
            l.iter()
                .map(|&e| {
                    let t = src_mesh.triangle_points(e);
                    let v = element_values(source, e);
                    [t[0].x, t[0].y, t[1].x, t[1].y, t[2].x, t[2].y, v[0], v[1], v[2]]
                })
                .collect()
        })
        .collect();
    let src_mail = exchange(&src_plan, &src_payload)?;
    rec.add(0, Role::AppA, Role::Rdv, &src_mail);

    let tgt_plan = RoutingPlan::multicast(group(b.elem_owners(), b.n_ranks()), n_rdv, |e| {
        Ok(rdv.owners_overlapping(&target.element_bbox(e)))
    })?;
    let tgt_payload: Vec<Vec<[f64; 6]>> = tgt_plan
        .src_layout()
        .iter()
        .map(|l| {
            l.iter()
                .map(|&e| {
                    let t = target.triangle_points(e);
                    [t[0].x, t[0].y, t[1].x, t[1].y, t[2].x, t[2].y]
                })
                .collect()
        })
        .collect();
    let tgt_mail = exchange(&tgt_plan, &tgt_payload)?;
    rec.add(0, Role::AppB, Role::Rdv, &tgt_mail);

    // Each rendezvous rank integrates the pairs whose bounding-box overlap starts in one
    // of its cells, so every pair is handled exactly once.
    let per_rank = run_ranks(n_rdv, exec, |r| -> Result<Vec<PairContribution>, RdvError> {
        let mut srcs: Vec<(usize, [f64; 9])> =
            src_plan.dst_layout()[r].iter().copied().zip(src_mail.values(r).iter().copied()).collect();
        srcs.sort_by_key(|&(id, _)| id);
        let mut tgts: Vec<(usize, [f64; 6])> =
            tgt_plan.dst_layout()[r].iter().copied().zip(tgt_mail.values(r).iter().copied()).collect();
        tgts.sort_by_key(|&(id, _)| id);
        let src_tris: Vec<[Point2; 3]> = srcs.iter().map(|(_, v)| tri_of(&v[..6])).collect();
        let src_boxes: Vec<BBox> = src_tris.iter().map(bbox_of).collect();
        let Some(bins) = BoxBins::new(&src_boxes) else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();
        for (te, tv) in &tgts {
            let tt = tri_of(tv);
            let tb = bbox_of(&tt);
            for k in bins.candidates(&tb) {
                let sb = src_boxes[k];
                if !sb.overlaps(&tb) {
                    continue;
                }
                let corner = Point2::new(sb.min.x.max(tb.min.x), sb.min.y.max(tb.min.y));
                if rdv.owner_of(corner) != Some(r) {
                    continue;
                }
                let (se, sv) = &srcs[k];
                let Some(poly) = clip_pair(src_tris[k], tt, sliver) else {
                    continue;
                };
                let input = PairInput {
                    source_elem: *se,
                    target_elem: *te,
                    source_tri: src_tris[k],
                    source_values: [sv[6], sv[7], sv[8]],
                    source_shape: source.shape(),
                    target_tri: tt,
                    target_shape: shape,
                };
                out.push(pair_contribution(&input, &poly, &rules)?);
            }
        }
        Ok(out)
    });
    let per_rank = per_rank.into_iter().collect::<Result<Vec<_>, _>>()?;

    // Round 1: contributions gather on rendezvous rank 0, which solves the global system.
    let mut next = 0;
    let layout: Vec<Vec<usize>> = per_rank
        .iter()
        .map(|c| {
            let ids = (next..next + c.len()).collect();
            next += c.len();
            ids
        })
        .collect();
    let gather = RoutingPlan::multicast(layout, n_rdv, |_| Ok(vec![0]))?;
    let gather_payload: Vec<Vec<[f64; 16]>> = per_rank.iter().map(|cs| cs.iter().map(pack).collect()).collect();
    let gather_mail = exchange(&gather, &gather_payload)?;
    rec.add(1, Role::Rdv, Role::Rdv, &gather_mail);
    let mut contribs: Vec<PairContribution> = gather_mail.values(0).iter().map(unpack).collect();
    contribs.sort_by_key(|c| (c.target_elem, c.source_elem));
    let system = assemble_system(target, shape, &contribs);
    let solved = finish(system, target.clone(), shape, opts.rel_tol, opts.max_iter)?;

    // Round 2: the solver scatters target values to B's owners.
    let n_dofs = shape.location().count(target);
    let mut solver_layout = vec![Vec::new(); n_rdv];
    solver_layout[0] = (0..n_dofs).collect();
    let owners = b.dof_owners(target, shape.location());
    let scatter = RoutingPlan::multicast(solver_layout, b.n_ranks(), |k| Ok(vec![owners[k]]))?;
    let mut scatter_payload = vec![Vec::new(); n_rdv];
    scatter_payload[0] = solved.field.values().to_vec();
    let scatter_mail = exchange(&scatter, &scatter_payload)?;
    rec.add(2, Role::Rdv, Role::AppB, &scatter_mail);
    let mut out = vec![0.0; n_dofs];
    for (layout, vals) in scatter.dst_layout().iter().zip(scatter_mail.into_buffers()) {
        for (&k, v) in layout.iter().zip(vals) {
            out[k] = v;
        }
    }
    Ok(CoupledResult {
        field: Field::new(target.clone(), shape, out)?,
        stats: rec.finish(a.n_ranks(), b.n_ranks(), n_rdv),
        halo_rounds: 1,
    })
}
