//! Normalize a grayscale image: equalize its histogram, resize it to a
//! classifier input size, then apply a flip and a small rotation.
//!
//! ```bash
//! cargo run --example preprocess_image -- /tmp/prep
//! ```

use std::path::PathBuf;

use malignancy_miner::preprocess::{equalize, hflip, load_png, resize, rotate, save_png, GrayImage};

fn main() {
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("malignancy-miner-prep"));
    std::fs::create_dir_all(&out).unwrap();

    // A low-contrast radial blob squeezed into intensities 90..=150.
    let (w, h) = (160u32, 120u32);
    let mut pixels = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let dx = f64::from(x) - 60.0;
            let dy = f64::from(y) - 60.0;
            let r = (dx * dx + dy * dy).sqrt() / 100.0;
            pixels.push((150.0 - 60.0 * r.min(1.0)).round() as u8);
        }
    }
    let img = GrayImage::new(w, h, pixels).unwrap();

    let range = |i: &GrayImage| {
        (
            i.pixels().iter().min().copied().unwrap(),
            i.pixels().iter().max().copied().unwrap(),
        )
    };
    let eq = equalize(&img).unwrap();
    println!("intensity range {:?} -> {:?}", range(&img), range(&eq));

    let sized = resize(&eq, 299, 299).unwrap();
    let flipped = hflip(&sized);
    let rotated = rotate(&flipped, 1.0, true);
    println!(
        "resized to {}x{}, rotated canvas {}x{}",
        sized.width(),
        sized.height(),
        rotated.width(),
        rotated.height()
    );

    for (name, i) in [
        ("original", &img),
        ("equalized", &eq),
        ("resized", &sized),
        ("augmented", &rotated),
    ] {
        let path = out.join(format!("{name}.png"));
        save_png(i, &path).unwrap();
        assert_eq!(&load_png(&path).unwrap(), i);
        println!("wrote {}", path.display());
    }
}
