//! Numerical toolkit for Reeb dynamics on the tight 3-sphere near a Hopf link,
//! and for geodesic flows on the 2-sphere seen through the unit tangent bundle.
//!
//! The crate is organized around six subsystems:
//!
//! - [`sympath`]: Conley-Zehnder index machinery for paths in `Sp(1)` given by
//!   a 1-periodic symmetric generator. Winding intervals, geometric and
//!   spectral indices, iteration laws, rotation and mean indices.
//! - [`twistcone`]: the angular order on pairs, non-resonance cone membership,
//!   enumeration of relatively prime classes, and even/odd winding predictions
//!   on the unit tangent bundle.
//! - [`modelforms`]: profile curves, the star-shaped hypersurfaces they induce,
//!   closed-form invariant tori and their model Conley-Zehnder indices.
//! - [`perturbation`]: adapted torus coordinates, the perturbed Reeb field, its
//!   reduced planar vector field, surviving orbits and gradient cylinders.
//! - [`s3flow`]: general Reeb integration on the 3-sphere for rescaled contact
//!   forms, transverse rotation numbers, linking numbers and orbit shooting.
//! - [`sphere_geodesics`]: Jacobi fields and rotation numbers of closed
//!   geodesics, Clairaut satellites on surfaces of revolution, the double
//!   cover of the unit tangent bundle and half-integer windings.

pub mod modelforms;
pub mod numerics;
pub mod orbits;
pub mod perturbation;
pub mod s3flow;
pub mod sphere_geodesics;
pub mod sympath;
pub mod twistcone;
