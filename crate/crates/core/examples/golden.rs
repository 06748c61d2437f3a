//! Regenerate the golden model, input and expected scores under `testdata/`.

use std::fs;
use std::path::Path;

use xtern::runtime::{run_inference, save_model, zoo, Precision};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("testdata");
    fs::create_dir_all(&dir)?;
    let g = zoo::vgg_cifar(Precision::Ternary, 40, 7)?;
    let x = zoo::random_input(&g, 7)?;
    save_model(&g, dir.join("vgg40.xtnm"))?;
    fs::write(dir.join("vgg40_input.trit"), x.to_blob())?;
    let scores = run_inference(&g, &x, 1)?.scores;
    let text: Vec<String> = scores.iter().map(i32::to_string).collect();
    fs::write(dir.join("vgg40_scores.txt"), text.join(" ") + "\n")?;
    println!("wrote {}", dir.display());
    Ok(())
}
