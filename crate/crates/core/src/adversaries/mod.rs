//! Lower-bound instance families, conflict analytics and adaptive duels.

pub mod conflicts;
pub mod duels;
pub mod generators;

pub use conflicts::{analyze_conflicts, PeriodKind, PeriodReport};
pub use duels::{
    duel_nm2, duel_restart_lb, duel_unknown_n, nm2_flow_bound, phase2_flow, DuelReport, Nm2Info, RestartBranch,
    RestartLbInfo, UnknownNClass, UnknownNDuel,
};
pub use generators::{
    gen_multi_lb, gen_multi_restart_lb, gen_single_rand_lb, generate, multi_lb, multi_restart_lb, single_rand_lb,
    GadgetRole, GeneratedFamily, MULTI_LB, MULTI_RESTART_LB, SINGLE_RAND_LB,
};
