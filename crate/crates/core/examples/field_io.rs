//! Text and binary field dumps, and an envelope archive with digests.

use std::f64::consts::PI;
use std::fs;

use psh_envelope::envelope::{envelope_psor, read_dir, write_dir, PsorOptions};
use psh_envelope::torus::{io, Grid, TorusGeometry};

fn main() -> psh_envelope::Result<()> {
    let geometry = TorusGeometry::flat(1)?;
    let grid = Grid::new(geometry.clone(), 32)?;
    let v = grid.sample(|x| 0.3 * (2.0 * PI * x[0]).cos() + 0.1 * (2.0 * PI * x[1]).sin())?;

    let mut text = Vec::new();
    io::write_text(&v, &mut text)?;
    let mut binary = Vec::new();
    io::write_binary(&v, &mut binary)?;
    assert_eq!(io::read_text(&text[..], &geometry)?, v);
    assert_eq!(io::read_binary(&binary[..], &geometry)?, v);
    println!("text {} bytes, binary {} bytes, header {:?}", text.len(), binary.len(), io::text_header(&grid));

    let dir = std::env::temp_dir().join("pshenv-io-example");
    write_dir(&envelope_psor(&v, &PsorOptions::default())?, &dir)?;
    println!("{}", fs::read_to_string(dir.join("manifest.json"))?);

    fs::write(dir.join("u_theta.tfield"), "tampered")?;
    match read_dir(&dir) {
        Err(e) => println!("tampered archive rejected: {e}"),
        Ok(_) => unreachable!("digest mismatch must be detected"),
    }
    Ok(())
}
