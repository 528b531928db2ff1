//! Transaction-level model of an interposer that acts as a root of trust for
//! untrusted chiplets.
//!
//! Master chiplets reach memory chiplets only through a bus matrix on the
//! interposer. In front of every slave sits a transaction monitor holding two
//! policy tables: an address allow-list and a data deny-list. Policies are
//! written only through a trusted configuration unit, never from a master
//! port, and every master id is the physical port a request arrived on.
//!
//! * [`policy`]: pure matching of address and data policies.
//! * [`transmon`]: the per-slave monitor and its two-phase check.
//! * [`fabric`]: memory map, decoding, arbitration, configuration and the cycle loop.
//! * [`devices`]: trace-driven masters and SRAM / register-block slaves.
//! * [`scenario`]: the `.isea` scenario file format.
//! * [`trace`] and [`runner`]: trace lines, run reports and one-call simulation.
//! * [`analyze`]: static analysis of a scenario's policy set.

pub mod analyze;
pub mod devices;
pub mod fabric;
pub mod policy;
pub mod runner;
pub mod scenario;
pub mod trace;
pub mod transmon;

pub use fabric::{MemoryMap, System, TcuCommand, Topology};
pub use policy::{AccessKind, ApuPolicy, DenyReason, DpuPolicy, MasterId, Permission, Verdict, Word};
pub use runner::{simulate, RunOutcome};
pub use scenario::{parse, Scenario};
pub use trace::{render_trace, RunReport, TraceEvent};
