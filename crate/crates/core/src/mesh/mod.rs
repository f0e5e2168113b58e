//! Curved simplicial surface meshes: reference element, quadrature,
//! level-set meshing and file I/O.

pub mod io;
pub mod levelset;
pub mod quadrature;
pub mod reference;
pub mod surface;

pub use io::{display_triangles, export_mesh, format_obj, format_off, format_vtk, load_mesh, parse_obj, parse_off, MeshFormat, PointData};
pub use levelset::{elevate_to_quadratic, flip_orientation, generate_levelset_mesh, icosphere, LevelSet, QuadricLevelSet};
pub use quadrature::TriangleQuadrature;
pub use reference::{ReferenceElement, MAX_LOCAL};
pub use surface::{ElementGeometry, FEFunction, SurfaceMesh};
