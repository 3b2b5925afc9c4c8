//! Planar pushing simulator and reinforcement-learning harness.
//!
//! A differential-drive robot pushes boxes across a floor whose friction
//! varies by region. Every push is priced by the virtual friction work it
//! costs to slide and rotate the box, and that cost is folded into the
//! reward signal so that trained policies prefer cheap pushes: low-friction
//! paths, lighter boxes.
//!
//! Crate layout:
//! - [`geom`]: 2D primitives (vectors, rectangles, oriented boxes, contacts)
//! - [`cost`]: friction-work model and running-bounds cost normalization
//! - [`sim`]: deterministic quasi-static world stepping
//! - [`envs`]: the two pushing tasks as episodic RL environments
//! - [`ppo`]: self-contained PPO trainer (manual backprop, Adam)
//! - [`harness`]: training runs, evaluation, ablations, metric export

pub mod cost;
pub mod envs;
pub mod geom;
pub mod harness;
pub mod ppo;
pub mod sim;
