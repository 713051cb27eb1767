//! Optimal and suboptimal solvers for cooperative transportation task
//! assignment and path finding on 4-connected grids.
//!
//! Agents are assigned to the slots of cooperative tasks. A task needing `k`
//! agents is carried by a rigid convoy that forms once every member has
//! reached its slot, and moves the shape to its goal configuration. The
//! objective is the sum over agents of the time each finishes its last task.

pub mod domain;
pub mod conflict;
pub mod lowlevel;
pub mod search;
pub mod oracle;
pub mod scen;
pub mod bench;
pub mod subopt;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/instances.md")]
    mod instances {}
    #[doc = include_str!("../../../book/src/search.md")]
    mod search {}
    #[doc = include_str!("../../../book/src/suboptimal.md")]
    mod suboptimal {}
    #[doc = include_str!("../../../book/src/generating.md")]
    mod generating {}
    #[doc = include_str!("../../../book/src/checking.md")]
    mod checking {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
