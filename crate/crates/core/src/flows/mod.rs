//! Catalog of explicit time-dependent metrics and their published closed forms.

mod catalog;
mod closed_form;
mod potential;
mod sn;

pub use catalog::{make_flow, BaseMetric, Flow, FlowKind, IsothermalFactor, WarpProfile};
pub use closed_form::{
    cigar_steady_potential, closed_form_ric_scalar, closed_form_ry, closed_form_volume_variation, VolumeVariation,
};
pub use potential::Potential;
pub use sn::SnK;
