use super::partition::{group, AppPartition, RdvPartition};
use super::RdvError;
use crate::mesh::{Mesh, Point2};

/// Bytes charged per routed entity for its identifier.
pub const ID_BYTES: usize = 8;

/// Values that can travel in a message.
pub trait Payload: Clone {
    fn byte_len(&self) -> usize;
}

impl Payload for f64 {
    fn byte_len(&self) -> usize {
        8
    }
}

impl<const N: usize> Payload for [f64; N] {
    fn byte_len(&self) -> usize {
        8 * N
    }
}

/// Entities sent from one rank to another. `src_slots` index the sender's payload and
/// `dst_slots` the receiver's buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    pub src: usize,
    pub dst: usize,
    pub entities: Vec<usize>,
    pub src_slots: Vec<usize>,
    pub dst_slots: Vec<usize>,
}

/// Complete routing between a set of sending ranks and a set of receiving ranks, routes
/// sorted by `(src, dst)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutingPlan {
    src_layout: Vec<Vec<usize>>,
    dst_layout: Vec<Vec<usize>>,
    routes: Vec<Route>,
}

impl RoutingPlan {
    /// Builds a plan where rank `r` sends `layout[r][k]` to every rank in
    /// `destinations(layout[r][k])`. Each rank's routes depend only on its own entities.
    pub fn multicast(
        layout: Vec<Vec<usize>>,
        n_dst: usize,
        mut destinations: impl FnMut(usize) -> Result<Vec<usize>, RdvError>,
    ) -> Result<RoutingPlan, RdvError> {
        let mut routes = Vec::new();
        for (src, owned) in layout.iter().enumerate() {
            let mut per_dst: Vec<Route> = Vec::new();
            let mut slot_of_dst = vec![usize::MAX; n_dst];
            for (slot, &e) in owned.iter().enumerate() {
                for d in destinations(e)? {
                    if slot_of_dst[d] == usize::MAX {
                        slot_of_dst[d] = per_dst.len();
                        per_dst.push(Route { src, dst: d, entities: Vec::new(), src_slots: Vec::new(), dst_slots: Vec::new() });
                    }
                    let r = &mut per_dst[slot_of_dst[d]];
                    r.entities.push(e);
                    r.src_slots.push(slot);
                }
            }
            per_dst.sort_by_key(|r| r.dst);
            routes.extend(per_dst);
        }
        // receivers lay out their buffers in (src, position) order
        let mut dst_layout = vec![Vec::new(); n_dst];
        for r in &mut routes {
            let buf: &mut Vec<usize> = &mut dst_layout[r.dst];
            r.dst_slots = (buf.len()..buf.len() + r.entities.len()).collect();
            buf.extend_from_slice(&r.entities);
        }
        Ok(RoutingPlan { src_layout: layout, dst_layout, routes })
    }

    /// Single-destination plan routing each entity to the rendezvous owner of its anchor.
    pub fn to_owners(layout: Vec<Vec<usize>>, anchors: &[Point2], rdv: &RdvPartition) -> Result<RoutingPlan, RdvError> {
        RoutingPlan::multicast(layout, rdv.n_ranks(), |e| {
            rdv.owner_of(anchors[e]).map(|r| vec![r]).ok_or(RdvError::OutsideRendezvous(anchors[e]))
        })
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn src_layout(&self) -> &[Vec<usize>] {
        &self.src_layout
    }

    pub fn dst_layout(&self) -> &[Vec<usize>] {
        &self.dst_layout
    }

    pub fn n_src(&self) -> usize {
        self.src_layout.len()
    }

    pub fn n_dst(&self) -> usize {
        self.dst_layout.len()
    }

    pub fn n_messages(&self) -> usize {
        self.routes.len()
    }

    pub fn n_routed(&self) -> usize {
        self.routes.iter().map(|r| r.entities.len()).sum()
    }
}

/// Routes every element owned under `app` to the rendezvous owner of its centroid.
pub fn plan_forward(mesh: &Mesh, app: &AppPartition, rdv: &RdvPartition) -> Result<RoutingPlan, RdvError> {
    RoutingPlan::to_owners(group(app.elem_owners(), app.n_ranks()), &mesh.centroids(), rdv)
}

/// Inverse routing: every route is turned around. For single-destination plans the
/// result sends each value back to the slot it came from, and reversing twice gives the
/// original plan.
pub fn plan_reverse(plan: &RoutingPlan) -> RoutingPlan {
    let mut routes: Vec<Route> = plan
        .routes
        .iter()
        .map(|r| Route {
            src: r.dst,
            dst: r.src,
            entities: r.entities.clone(),
            src_slots: r.dst_slots.clone(),
            dst_slots: r.src_slots.clone(),
        })
        .collect();
    routes.sort_by_key(|r| (r.src, r.dst));
    RoutingPlan { src_layout: plan.dst_layout.clone(), dst_layout: plan.src_layout.clone(), routes }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message<T> {
    pub src: usize,
    pub dst: usize,
    pub entities: Vec<usize>,
    pub values: Vec<T>,
}

impl<T: Payload> Message<T> {
    pub fn byte_len(&self) -> usize {
        self.values.iter().map(|v| ID_BYTES + v.byte_len()).sum()
    }
}

/// Delivered messages per receiving rank, sorted by sender.
#[derive(Debug, Clone, PartialEq)]
pub struct Mailboxes<T> {
    n_src: usize,
    inboxes: Vec<Vec<Message<T>>>,
    buffers: Vec<Vec<T>>,
}

/// Per-rank message counts and bytes of one exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Traffic {
    pub msgs_sent: usize,
    pub msgs_recv: usize,
    pub bytes_sent: usize,
    pub bytes_recv: usize,
}

impl<T: Payload> Mailboxes<T> {
    pub fn inbox(&self, rank: usize) -> &[Message<T>] {
        &self.inboxes[rank]
    }

    /// Received values of `rank` in the order of the plan's destination layout.
    pub fn values(&self, rank: usize) -> &[T] {
        &self.buffers[rank]
    }

    pub fn into_buffers(self) -> Vec<Vec<T>> {
        self.buffers
    }

    pub fn total_entries(&self) -> usize {
        self.inboxes.iter().flatten().map(|m| m.values.len()).sum()
    }

    /// `(senders, receivers)` traffic.
    pub fn traffic(&self) -> (Vec<Traffic>, Vec<Traffic>) {
        let mut send = vec![Traffic::default(); self.n_src];
        let mut recv = vec![Traffic::default(); self.inboxes.len()];
        for m in self.inboxes.iter().flatten() {
            let b = m.byte_len();
            send[m.src].msgs_sent += 1;
            send[m.src].bytes_sent += b;
            recv[m.dst].msgs_recv += 1;
            recv[m.dst].bytes_recv += b;
        }
        (send, recv)
    }
}

/// Delivers `payload[r][k]` (the value of the `k`th entity in the plan's source layout of
/// rank `r`) along every route. No arithmetic touches the values.
pub fn exchange<T: Payload>(plan: &RoutingPlan, payload: &[Vec<T>]) -> Result<Mailboxes<T>, RdvError> {
    if payload.len() != plan.n_src() {
        return Err(RdvError::RankCountMismatch { expected: plan.n_src(), found: payload.len() });
    }
    for (r, (p, l)) in payload.iter().zip(&plan.src_layout).enumerate() {
        if p.len() != l.len() {
            return Err(RdvError::PayloadMismatch { rank: r, expected: l.len(), found: p.len() });
        }
    }
    let mut inboxes: Vec<Vec<Message<T>>> = vec![Vec::new(); plan.n_dst()];
    let mut slots: Vec<Vec<Option<T>>> = plan.dst_layout.iter().map(|l| vec![None; l.len()]).collect();
    for r in &plan.routes {
        let values: Vec<T> = r.src_slots.iter().map(|&s| payload[r.src][s].clone()).collect();
        for (&d, v) in r.dst_slots.iter().zip(&values) {
            slots[r.dst][d] = Some(v.clone());
        }
        inboxes[r.dst].push(Message { src: r.src, dst: r.dst, entities: r.entities.clone(), values });
    }
    let buffers = slots
        .into_iter()
        .map(|b| b.into_iter().collect::<Option<Vec<T>>>())
        .collect::<Option<Vec<_>>>()
        .ok_or(RdvError::IncompletePlan)?;
    Ok(Mailboxes { n_src: plan.n_src(), inboxes, buffers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate;
    use crate::rendezvous::{build_rdv_partition, rcb_partition};

    #[test]
    fn single_rank_is_one_self_message() {
        let m = generate::disk(1.0, 4).unwrap();
        let app = rcb_partition(&m, 1).unwrap();
        let rdv = build_rdv_partition(m.bbox(), 1, 1, 1).unwrap();
        let plan = plan_forward(&m, &app, &rdv).unwrap();
        assert_eq!(plan.n_messages(), 1);
        assert_eq!(plan.routes()[0].entities.len(), m.n_elems());
        assert_eq!(plan_reverse(&plan), plan);
    }

    #[test]
    fn forward_then_reverse_restores_payload() {
        let m = generate::disk(1.0, 8).unwrap();
        let app = rcb_partition(&m, 4).unwrap();
        let rdv = build_rdv_partition(m.bbox(), 3, 5, 6).unwrap();
        let plan = plan_forward(&m, &app, &rdv).unwrap();
        assert_eq!(plan.n_routed(), m.n_elems());
        assert!(plan.n_messages() <= 4 * 6);
        let payload: Vec<Vec<f64>> =
            plan.src_layout().iter().map(|l| l.iter().map(|&e| (e as f64).sqrt().sin()).collect()).collect();
        let there = exchange(&plan, &payload).unwrap();
        assert_eq!(there.total_entries(), m.n_elems());
        let back = exchange(&plan_reverse(&plan), &there.into_buffers()).unwrap();
        assert_eq!(back.into_buffers(), payload);
        assert_eq!(plan_reverse(&plan_reverse(&plan)), plan);
    }

    #[test]
    fn payload_mismatch_is_rejected() {
        let m = generate::square(2).unwrap();
        let app = rcb_partition(&m, 2).unwrap();
        let rdv = build_rdv_partition(m.bbox(), 2, 2, 2).unwrap();
        let plan = plan_forward(&m, &app, &rdv).unwrap();
        let bad = vec![vec![1.0; 1], vec![]];
        assert!(matches!(exchange(&plan, &bad), Err(RdvError::PayloadMismatch { .. })));
    }
}
