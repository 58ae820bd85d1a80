//! Synchronous message-passing simulator with per-round bandwidth accounting.
//!
//! Vertices run in lockstep rounds. Each round has a send phase followed by a
//! receive phase; at most one message crosses each edge per direction per
//! round, and every message is charged bits by field type against the round
//! bandwidth. Port `p` of vertex `v` is the `p`-th entry of `v`'s sorted
//! adjacency list, so ports are stable and locally meaningful only.
//!
//! A vertex halts by emitting a verdict; the run ends when every vertex has
//! halted. Any protocol violation (oversized message, out-of-range field,
//! duplicate send, exhausted round budget) aborts the run with an error
//! rather than degrading silently.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;

use crate::graph::{Graph, VertexId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Accept => "accept",
            Verdict::Reject => "reject",
        })
    }
}

/// One typed unit inside a message. Ids name vertices, small ints carry
/// values below `n^2`, bits carry flags; each type has a fixed charged width.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    Id(VertexId),
    Small(u64),
    Bit(bool),
}

/// Charged widths for one graph size: ids cost `ceil(log2 n)` bits, small
/// ints `ceil(log2 n^2)`, flags one bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FieldWidths {
    pub id: u32,
    pub small: u32,
}

fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

impl FieldWidths {
    pub fn for_n(n: usize) -> FieldWidths {
        let n = n as u64;
        FieldWidths { id: ceil_log2(n).max(1), small: ceil_log2(n.saturating_mul(n)).max(1) }
    }

    /// Default per-edge round budget: `4 ceil(log2 n) + 8` bits.
    pub fn default_bandwidth(&self) -> u32 {
        4 * self.id + 8
    }
}

impl Field {
    pub fn bits(&self, w: FieldWidths) -> u32 {
        match self {
            Field::Id(_) => w.id,
            Field::Small(_) => w.small,
            Field::Bit(_) => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Message {
    fields: SmallVec<[Field; 4]>,
}

impl Message {
    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn bits(&self, w: FieldWidths) -> u32 {
        self.fields.iter().map(|f| f.bits(w)).sum()
    }

    pub fn id_at(&self, i: usize) -> Option<VertexId> {
        match self.fields.get(i) {
            Some(Field::Id(x)) => Some(*x),
            _ => None,
        }
    }

    pub fn small_at(&self, i: usize) -> Option<u64> {
        match self.fields.get(i) {
            Some(Field::Small(x)) => Some(*x),
            _ => None,
        }
    }

    pub fn bit_at(&self, i: usize) -> Option<bool> {
        match self.fields.get(i) {
            Some(Field::Bit(b)) => Some(*b),
            _ => None,
        }
    }
}

impl FromIterator<Field> for Message {
    fn from_iter<T: IntoIterator<Item = Field>>(iter: T) -> Message {
        Message { fields: iter.into_iter().collect() }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SimError {
    #[error("graph has {n} vertices but {got} programs were supplied")]
    ProgramCount { n: usize, got: usize },
    #[error("round budget of {limit} exhausted before every vertex halted")]
    RoundLimit { limit: u32 },
    #[error("vertex {vertex} sent {bits} bits on port {port} in round {round}, budget {limit}")]
    Bandwidth { round: u32, vertex: VertexId, port: usize, bits: u32, limit: u32 },
    #[error("vertex {vertex} sent twice on port {port} in round {round}")]
    DuplicateSend { round: u32, vertex: VertexId, port: usize },
    #[error("vertex {vertex} used port {port} in round {round} but has degree {degree}")]
    BadPort { round: u32, vertex: VertexId, port: usize, degree: usize },
    #[error("vertex {vertex} put {value} in a field bounded by {bound} in round {round}")]
    FieldRange { round: u32, vertex: VertexId, value: u64, bound: u64 },
    #[error("vertex {vertex} tried to send outside the send phase in round {round}")]
    SendOutsidePhase { round: u32, vertex: VertexId },
    #[error("vertex {vertex} emitted a second verdict in round {round}")]
    DoubleVerdict { round: u32, vertex: VertexId },
}

/// Phase context handed to vertex programs. The same type serves init, send,
/// and receive; the outbox exists only during send and the inbox only during
/// receive. All information reachable here is local: own id, degree, `n`,
/// the round number, a round-scoped RNG, and this round's inbox.
pub struct Ctx<'a> {
    round: u32,
    vertex: VertexId,
    degree: usize,
    n: usize,
    widths: FieldWidths,
    bandwidth: u32,
    rng: &'a mut ChaCha8Rng,
    verdict: &'a mut Option<Verdict>,
    violation: &'a mut Option<SimError>,
    max_bits: &'a mut u32,
    outbox: Option<&'a mut [Option<Message>]>,
    inbox: Option<&'a [Option<Message>]>,
}

impl<'a> Ctx<'a> {
    pub fn vertex(&self) -> VertexId {
        self.vertex
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Total vertex count; global knowledge of `n` is assumed throughout.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Current round; init runs as round 0.
    pub fn round(&self) -> u32 {
        self.round
    }

    /// Deterministic per-(seed, vertex, round) generator, shared by the send
    /// and receive phases of one round.
    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        self.rng
    }

    fn flag(&mut self, e: SimError) {
        if self.violation.is_none() {
            *self.violation = Some(e);
        }
    }

    /// Queues one message on `port`. Field ranges, per-port uniqueness, and
    /// the bandwidth budget are all enforced here; a violation aborts the run.
    pub fn send(&mut self, port: usize, fields: impl IntoIterator<Item = Field>) {
        if self.violation.is_some() {
            return;
        }
        let (round, vertex) = (self.round, self.vertex);
        if self.outbox.is_none() {
            self.flag(SimError::SendOutsidePhase { round, vertex });
            return;
        }
        if port >= self.degree {
            let degree = self.degree;
            self.flag(SimError::BadPort { round, vertex, port, degree });
            return;
        }
        let msg: Message = fields.into_iter().collect();
        let n = self.n as u64;
        for f in msg.fields() {
            let bad = match *f {
                Field::Id(x) => (x as u64 >= n).then_some((x as u64, n)),
                Field::Small(x) => (x >= n * n).then_some((x, n * n)),
                Field::Bit(_) => None,
            };
            if let Some((value, bound)) = bad {
                self.flag(SimError::FieldRange { round, vertex, value, bound });
                return;
            }
        }
        let bits = msg.bits(self.widths);
        if bits > self.bandwidth {
            let limit = self.bandwidth;
            self.flag(SimError::Bandwidth { round, vertex, port, bits, limit });
            return;
        }
        let slot = &mut self.outbox.as_mut().unwrap()[port];
        if slot.is_some() {
            self.flag(SimError::DuplicateSend { round, vertex, port });
            return;
        }
        *self.max_bits = (*self.max_bits).max(bits);
        *slot = Some(msg);
    }

    /// The message that arrived on `port` this round, if any. Only populated
    /// during the receive phase.
    pub fn from_port(&self, port: usize) -> Option<&Message> {
        self.inbox.as_ref()?.get(port)?.as_ref()
    }

    /// All messages of this round's inbox as `(port, message)`, ports ascending.
    pub fn received(&self) -> impl Iterator<Item = (usize, &Message)> {
        self.inbox
            .iter()
            .flat_map(|inbox| inbox.iter().enumerate())
            .filter_map(|(p, m)| m.as_ref().map(|m| (p, m)))
    }

    pub fn accept(&mut self) {
        self.emit(Verdict::Accept);
    }

    pub fn reject(&mut self) {
        self.emit(Verdict::Reject);
    }

    fn emit(&mut self, v: Verdict) {
        if self.verdict.is_some() {
            let (round, vertex) = (self.round, self.vertex);
            self.flag(SimError::DoubleVerdict { round, vertex });
        } else {
            *self.verdict = Some(v);
        }
    }
}

/// One vertex's local algorithm. `init` runs before any communication
/// (round 0) and may already emit a verdict; afterwards each round calls
/// `send` then `receive` until the vertex emits. Emitting halts the vertex.
pub trait VertexProgram {
    fn init(&mut self, ctx: &mut Ctx);
    fn send(&mut self, ctx: &mut Ctx);
    fn receive(&mut self, ctx: &mut Ctx);
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub seed: u64,
    /// Per-edge per-round bit budget; `None` uses the width default.
    pub bandwidth: Option<u32>,
    /// Hard stop: exceeding this many rounds is a protocol violation.
    pub max_rounds: u32,
    /// Ends the run at the close of the first round with a rejection,
    /// leaving other vertices unhalted. The global verdict is unaffected.
    pub stop_on_reject: bool,
}

impl RunConfig {
    pub fn new(seed: u64) -> RunConfig {
        RunConfig { seed, bandwidth: None, max_rounds: 1_000_000, stop_on_reject: false }
    }
}

/// Outcome of one simulated run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialReport {
    /// Reject iff any vertex rejected.
    pub verdict: Verdict,
    /// Index of the last round that executed; 0 if all verdicts came at init.
    pub rounds: u32,
    /// Largest single message, in charged bits.
    pub max_message_bits: u32,
    pub rejecters: Vec<VertexId>,
}

impl TrialReport {
    /// Sequential composition: rounds add, widths max, the later verdict wins.
    pub fn then(self, second: TrialReport) -> TrialReport {
        TrialReport {
            verdict: second.verdict,
            rounds: self.rounds + second.rounds,
            max_message_bits: self.max_message_bits.max(second.max_message_bits),
            rejecters: second.rejecters,
        }
    }
}

pub type RunOutcome = Result<TrialReport, SimError>;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream splitter for deriving independent sub-seeds (e.g. phase two of a
/// composed protocol, or decomposition restarts).
pub fn mix_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ tag)
}

/// The generator a vertex sees in a given round. Chained mixing keeps the
/// streams of different vertices and rounds independent under one trial seed.
pub fn derive_vertex_rng(seed: u64, vertex: VertexId, round: u32) -> ChaCha8Rng {
    let s = splitmix64(splitmix64(splitmix64(seed) ^ vertex as u64) ^ round as u64);
    ChaCha8Rng::seed_from_u64(s)
}

/// Runs one program per vertex to completion and reports the outcome.
/// `programs[v]` keeps its final state afterwards, so callers may read
/// whatever the protocol computed locally.
pub fn run<P: VertexProgram>(graph: &Graph, programs: &mut [P], config: &RunConfig) -> RunOutcome {
    let n = graph.n();
    if programs.len() != n {
        return Err(SimError::ProgramCount { n, got: programs.len() });
    }
    let widths = FieldWidths::for_n(n);
    let bandwidth = config.bandwidth.unwrap_or_else(|| widths.default_bandwidth());

    // Port p of u leads to neighbor w; the same edge is port rev[u][p].1 at w.
    let rev: Vec<Vec<(VertexId, usize)>> = (0..n as VertexId)
        .map(|u| {
            graph
                .neighbors(u)
                .iter()
                .map(|&w| (w, graph.neighbors(w).binary_search(&u).expect("adjacency is symmetric")))
                .collect()
        })
        .collect();

    let mut verdicts: Vec<Option<Verdict>> = vec![None; n];
    let mut violation: Option<SimError> = None;
    let mut max_bits = 0u32;
    let mut rounds = 0u32;
    let mut outboxes: Vec<Vec<Option<Message>>> = (0..n).map(|v| vec![None; graph.degree(v as VertexId)]).collect();
    let mut inboxes = outboxes.clone();

    let phase = |programs: &mut [P],
                     v: usize,
                     round: u32,
                     rng: &mut ChaCha8Rng,
                     verdicts: &mut [Option<Verdict>],
                     violation: &mut Option<SimError>,
                     max_bits: &mut u32,
                     outbox: Option<&mut [Option<Message>]>,
                     inbox: Option<&[Option<Message>]>|
     -> Result<(), SimError> {
        let which = if round == 0 { 0 } else if outbox.is_some() { 1 } else { 2 };
        let mut ctx = Ctx {
            round,
            vertex: v as VertexId,
            degree: graph.degree(v as VertexId),
            n,
            widths,
            bandwidth,
            rng,
            verdict: &mut verdicts[v],
            violation,
            max_bits,
            outbox,
            inbox,
        };
        match which {
            0 => programs[v].init(&mut ctx),
            1 => programs[v].send(&mut ctx),
            _ => programs[v].receive(&mut ctx),
        }
        match violation.take() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    };

    for v in 0..n {
        let mut rng = derive_vertex_rng(config.seed, v as VertexId, 0);
        phase(programs, v, 0, &mut rng, &mut verdicts, &mut violation, &mut max_bits, None, None)?;
    }

    for r in 1..=config.max_rounds {
        if verdicts.iter().all(Option::is_some) {
            break;
        }
        if config.stop_on_reject && verdicts.contains(&Some(Verdict::Reject)) {
            break;
        }
        rounds = r;
        let mut rngs: Vec<Option<ChaCha8Rng>> = vec![None; n];

        for v in 0..n {
            if verdicts[v].is_some() {
                continue;
            }
            let rng = rngs[v].insert(derive_vertex_rng(config.seed, v as VertexId, r));
            outboxes[v].fill(None);
            phase(
                programs,
                v,
                r,
                rng,
                &mut verdicts,
                &mut violation,
                &mut max_bits,
                Some(&mut outboxes[v]),
                None,
            )?;
        }

        for pair in inboxes.iter_mut() {
            pair.fill(None);
        }
        for u in 0..n {
            for (port, slot) in outboxes[u].iter_mut().enumerate() {
                if let Some(msg) = slot.take() {
                    let (w, back_port) = rev[u][port];
                    // Halted receivers drop their mail.
                    if verdicts[w as usize].is_none() {
                        inboxes[w as usize][back_port] = Some(msg);
                    }
                }
            }
        }

        for v in 0..n {
            if verdicts[v].is_some() {
                continue;
            }
            let rng = rngs[v].as_mut().expect("send phase ran for every active vertex");
            let inbox = std::mem::take(&mut inboxes[v]);
            let result = phase(
                programs,
                v,
                r,
                rng,
                &mut verdicts,
                &mut violation,
                &mut max_bits,
                None,
                Some(&inbox),
            );
            inboxes[v] = inbox;
            result?;
        }
    }

    let rejecters: Vec<VertexId> = (0..n as VertexId)
        .filter(|&v| verdicts[v as usize] == Some(Verdict::Reject))
        .collect();
    let finished = verdicts.iter().all(Option::is_some);
    if !finished && !(config.stop_on_reject && !rejecters.is_empty()) {
        return Err(SimError::RoundLimit { limit: config.max_rounds });
    }
    let verdict = if rejecters.is_empty() { Verdict::Accept } else { Verdict::Reject };
    Ok(TrialReport { verdict, rounds, max_message_bits: max_bits, rejecters })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn widths_match_hand_computation() {
        let w90 = FieldWidths::for_n(90);
        assert_eq!((w90.id, w90.small, w90.default_bandwidth()), (7, 13, 36));
        let w1000 = FieldWidths::for_n(1000);
        assert_eq!((w1000.id, w1000.small, w1000.default_bandwidth()), (10, 20, 48));
        let w2 = FieldWidths::for_n(2);
        assert_eq!((w2.id, w2.small, w2.default_bandwidth()), (1, 2, 12));
        let w5 = FieldWidths::for_n(5);
        assert_eq!((w5.id, w5.small, w5.default_bandwidth()), (3, 5, 20));
    }

    /// Sends its id everywhere in round 1, records what arrived, then accepts.
    #[derive(Default)]
    struct EchoIds {
        heard: Vec<(usize, VertexId)>,
    }

    impl VertexProgram for EchoIds {
        fn init(&mut self, _ctx: &mut Ctx) {}

        fn send(&mut self, ctx: &mut Ctx) {
            for p in 0..ctx.degree() {
                let me = ctx.vertex();
                ctx.send(p, [Field::Id(me)]);
            }
        }

        fn receive(&mut self, ctx: &mut Ctx) {
            for (p, msg) in ctx.received() {
                self.heard.push((p, msg.id_at(0).unwrap()));
            }
            ctx.accept();
        }
    }

    #[test]
    fn round_one_learns_the_neighborhood() {
        let g = Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (2, 3), (3, 4)]).unwrap();
        let mut programs: Vec<EchoIds> = (0..5).map(|_| EchoIds::default()).collect();
        let report = run(&g, &mut programs, &RunConfig::new(1)).unwrap();
        assert_eq!(report.verdict, Verdict::Accept);
        assert_eq!(report.rounds, 1);
        assert_eq!(report.max_message_bits, FieldWidths::for_n(5).id);
        for v in 0..5u32 {
            let mut heard = programs[v as usize].heard.clone();
            heard.sort_unstable();
            let expected: Vec<(usize, VertexId)> =
                g.neighbors(v).iter().copied().enumerate().collect();
            assert_eq!(heard, expected, "vertex {v} port map");
        }
    }

    proptest! {
        #[test]
        fn delivery_respects_ports_on_random_graphs(n in 2usize..12, mseed in 0u64..500) {
            let pairs = n * (n - 1) / 2;
            let mut rng = ChaCha8Rng::seed_from_u64(mseed);
            let m = rng.gen_range(0..=pairs);
            let g = crate::generate::gnm(n, m, &mut rng).unwrap();
            let mut programs: Vec<EchoIds> = (0..n).map(|_| EchoIds::default()).collect();
            let report = run(&g, &mut programs, &RunConfig::new(mseed)).unwrap();
            prop_assert_eq!(report.verdict, Verdict::Accept);
            for v in 0..n as VertexId {
                let mut heard = programs[v as usize].heard.clone();
                heard.sort_unstable();
                let expected: Vec<(usize, VertexId)> =
                    g.neighbors(v).iter().copied().enumerate().collect();
                prop_assert_eq!(heard, expected);
            }
        }
    }

    struct SendsTooMuch;

    impl VertexProgram for SendsTooMuch {
        fn init(&mut self, _ctx: &mut Ctx) {}

        fn send(&mut self, ctx: &mut Ctx) {
            if ctx.degree() > 0 {
                let me = ctx.vertex();
                ctx.send(0, std::iter::repeat_n(Field::Id(me), 40));
            }
        }

        fn receive(&mut self, ctx: &mut Ctx) {
            ctx.accept();
        }
    }

    #[test]
    fn oversized_messages_abort_loudly() {
        let g = Graph::path(2);
        let mut programs = vec![SendsTooMuch, SendsTooMuch];
        let err = run(&g, &mut programs, &RunConfig::new(0)).unwrap_err();
        assert_eq!(
            err,
            SimError::Bandwidth { round: 1, vertex: 0, port: 0, bits: 40, limit: 12 }
        );
    }

    struct NeverHalts;

    impl VertexProgram for NeverHalts {
        fn init(&mut self, _ctx: &mut Ctx) {}
        fn send(&mut self, _ctx: &mut Ctx) {}
        fn receive(&mut self, _ctx: &mut Ctx) {}
    }

    #[test]
    fn round_budget_is_enforced() {
        let g = Graph::path(3);
        let mut programs = vec![NeverHalts, NeverHalts, NeverHalts];
        let mut config = RunConfig::new(0);
        config.max_rounds = 17;
        assert_eq!(run(&g, &mut programs, &config).unwrap_err(), SimError::RoundLimit { limit: 17 });
    }

    struct DoubleSender;

    impl VertexProgram for DoubleSender {
        fn init(&mut self, _ctx: &mut Ctx) {}

        fn send(&mut self, ctx: &mut Ctx) {
            if ctx.vertex() == 0 {
                ctx.send(0, [Field::Bit(true)]);
                ctx.send(0, [Field::Bit(false)]);
            }
        }

        fn receive(&mut self, ctx: &mut Ctx) {
            ctx.accept();
        }
    }

    #[test]
    fn one_message_per_edge_per_round() {
        let g = Graph::path(2);
        let mut programs = vec![DoubleSender, DoubleSender];
        let err = run(&g, &mut programs, &RunConfig::new(0)).unwrap_err();
        assert_eq!(err, SimError::DuplicateSend { round: 1, vertex: 0, port: 0 });
    }

    struct OutOfRangeId;

    impl VertexProgram for OutOfRangeId {
        fn init(&mut self, _ctx: &mut Ctx) {}

        fn send(&mut self, ctx: &mut Ctx) {
            let n = ctx.n() as VertexId;
            ctx.send(0, [Field::Id(n)]);
        }

        fn receive(&mut self, ctx: &mut Ctx) {
            ctx.accept();
        }
    }

    #[test]
    fn field_ranges_are_checked() {
        let g = Graph::path(2);
        let mut programs = vec![OutOfRangeId, OutOfRangeId];
        let err = run(&g, &mut programs, &RunConfig::new(0)).unwrap_err();
        assert_eq!(err, SimError::FieldRange { round: 1, vertex: 0, value: 2, bound: 2 });
    }

    /// Vertex 0 rejects in round `reject_round`; everyone else accepts in
    /// round `accept_round`.
    struct TimedVerdicts {
        reject_round: u32,
        accept_round: u32,
    }

    impl VertexProgram for TimedVerdicts {
        fn init(&mut self, ctx: &mut Ctx) {
            if ctx.vertex() == 0 && self.reject_round == 0 {
                ctx.reject();
            }
        }

        fn send(&mut self, _ctx: &mut Ctx) {}

        fn receive(&mut self, ctx: &mut Ctx) {
            if ctx.vertex() == 0 {
                if ctx.round() == self.reject_round {
                    ctx.reject();
                }
            } else if ctx.round() == self.accept_round {
                ctx.accept();
            }
        }
    }

    #[test]
    fn any_rejection_makes_the_global_verdict_reject() {
        let g = Graph::path(3);
        let mk = || TimedVerdicts { reject_round: 2, accept_round: 5 };
        let mut programs = vec![mk(), mk(), mk()];
        let report = run(&g, &mut programs, &RunConfig::new(0)).unwrap();
        assert_eq!(report.verdict, Verdict::Reject);
        assert_eq!(report.rejecters, vec![0]);
        assert_eq!(report.rounds, 5);
    }

    #[test]
    fn stop_on_reject_cuts_the_run_short() {
        let g = Graph::path(3);
        let mk = || TimedVerdicts { reject_round: 2, accept_round: 5 };
        let mut programs = vec![mk(), mk(), mk()];
        let mut config = RunConfig::new(0);
        config.stop_on_reject = true;
        let report = run(&g, &mut programs, &config).unwrap();
        assert_eq!(report.verdict, Verdict::Reject);
        assert_eq!(report.rounds, 2);
    }

    /// Rejects at init when its id is 0, accepts at init otherwise.
    struct InstantVerdict;

    impl VertexProgram for InstantVerdict {
        fn init(&mut self, ctx: &mut Ctx) {
            if ctx.vertex() == 0 {
                ctx.reject();
            } else {
                ctx.accept();
            }
        }
        fn send(&mut self, _ctx: &mut Ctx) {}
        fn receive(&mut self, _ctx: &mut Ctx) {}
    }

    #[test]
    fn verdicts_at_init_use_zero_rounds() {
        let g = Graph::path(2);
        let mut programs = vec![InstantVerdict, InstantVerdict];
        let report = run(&g, &mut programs, &RunConfig::new(0)).unwrap();
        assert_eq!(report.rounds, 0);
        assert_eq!(report.verdict, Verdict::Reject);
        assert_eq!(report.rejecters, vec![0]);
    }

    #[test]
    fn program_count_must_match() {
        let g = Graph::path(3);
        let mut too_few = vec![InstantVerdict];
        assert!(matches!(
            run(&g, &mut too_few, &RunConfig::new(0)),
            Err(SimError::ProgramCount { n: 3, got: 1 })
        ));
    }

    /// Draws one random u64 in round 1 and remembers it.
    #[derive(Default)]
    struct DrawsOnce {
        drew: u64,
    }

    impl VertexProgram for DrawsOnce {
        fn init(&mut self, _ctx: &mut Ctx) {}

        fn send(&mut self, ctx: &mut Ctx) {
            self.drew = ctx.rng().gen();
        }

        fn receive(&mut self, ctx: &mut Ctx) {
            ctx.accept();
        }
    }

    #[test]
    fn runs_are_deterministic_and_streams_are_distinct() {
        let g = Graph::cycle(6);
        let mut a: Vec<DrawsOnce> = (0..6).map(|_| DrawsOnce::default()).collect();
        let mut b: Vec<DrawsOnce> = (0..6).map(|_| DrawsOnce::default()).collect();
        run(&g, &mut a, &RunConfig::new(42)).unwrap();
        run(&g, &mut b, &RunConfig::new(42)).unwrap();
        let draws_a: Vec<u64> = a.iter().map(|p| p.drew).collect();
        let draws_b: Vec<u64> = b.iter().map(|p| p.drew).collect();
        assert_eq!(draws_a, draws_b);
        let distinct: std::collections::BTreeSet<u64> = draws_a.iter().copied().collect();
        assert_eq!(distinct.len(), 6, "vertex streams should differ");
        let mut c: Vec<DrawsOnce> = (0..6).map(|_| DrawsOnce::default()).collect();
        run(&g, &mut c, &RunConfig::new(43)).unwrap();
        assert_ne!(draws_a, c.iter().map(|p| p.drew).collect::<Vec<_>>());
    }
}
