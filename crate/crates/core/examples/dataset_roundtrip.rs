//! Write a synthetic dataset as `root/<class>/<image>.ppm`, load it back,
//! and show the manifest, including a file that fails to decode.
//!
//!     cargo run --example dataset_roundtrip

use std::fs;

use quantevo::dataset::write_dataset;
use quantevo::{load_dataset, synth};

fn main() -> quantevo::Result<()> {
    let root = std::env::temp_dir().join(format!("quantevo-roundtrip-{}", std::process::id()));
    let data = synth::random_palettes(2, 3, 8, 1);
    write_dataset(&data, &root)?;
    fs::write(root.join("k0").join("notes.txt"), "not an image").expect("write stray file");

    let (loaded, manifest) = load_dataset(&root)?;
    println!("loaded {} images in classes {:?}", loaded.len(), loaded.classes());
    println!("{}", manifest.to_json());
    assert_eq!(loaded.items().len(), data.items().len());

    fs::remove_dir_all(&root).expect("clean up");
    Ok(())
}
