//! Simulation toolkit for a modular spherical robot built from scissor-linkage
//! groups: linkage synthesis, module kinematics, workspace enumeration,
//! staged control under actuation error, and assembly reconfiguration.

pub mod slg;
pub mod kinematics;
pub mod workspace;
pub mod control;
pub mod reconfig;
pub mod report;
pub mod cli;
