//! Files: gray-map images and masks, ASCII height dumps, OBJ meshes.

pub mod dump;
pub mod mesh;
pub mod pgm;

pub use dump::{read_height_dump, write_height_dump};
pub use mesh::export_mesh_obj;
pub use pgm::{read_image_pgm, read_mask_pgm, write_image_pgm, write_mask_pgm};
