//! Rasterization of layouts into flat-color RGB images, plus the binary PPM
//! (P6) codec used as the canonical image format.
//!
//! Rendering is exact: no anti-aliasing, every foreground pixel is a pure
//! palette color, and a pixel is filled iff its center lies inside the
//! shape. Cubes project to axis-aligned squares, spheres to circles,
//! triangles to isoceles triangles (base at the bottom of the bounding box,
//! apex at top center).

use crate::layout::Layout;
use crate::tuple::{Color, Shape};
use thiserror::Error;

/// Row-major 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl RasterImage {
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> RasterImage {
        let mut pixels = Vec::with_capacity((width * height * 3) as usize);
        for _ in 0..width * height {
            pixels.extend_from_slice(&rgb);
        }
        RasterImage { width, height, pixels }
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = ((y * self.width + x) * 3) as usize;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = ((y * self.width + x) * 3) as usize;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }
}

/// Fixed color table. Foreground entries and the background are pairwise
/// separated by at least 64 on every channel where they differ, so reverse
/// lookup from pixels is unambiguous and robust.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Palette {
    entries: [(Color, [u8; 3]); 8],
    background: [u8; 3],
}

pub const STANDARD_PALETTE: Palette = Palette {
    entries: [
        (Color::Red, [255, 0, 0]),
        (Color::Green, [0, 128, 0]),
        (Color::Blue, [0, 0, 255]),
        (Color::Yellow, [255, 255, 0]),
        (Color::Purple, [128, 0, 128]),
        (Color::Brown, [128, 64, 0]),
        (Color::Gray, [128, 128, 128]),
        (Color::Cyan, [0, 255, 255]),
    ],
    background: [255, 255, 255],
};

impl Palette {
    pub fn standard() -> &'static Palette {
        &STANDARD_PALETTE
    }

    pub fn rgb(&self, color: Color) -> [u8; 3] {
        self.entries
            .iter()
            .find(|(c, _)| *c == color)
            .map(|(_, rgb)| *rgb)
            .expect("palette covers every color")
    }

    pub fn color_of(&self, rgb: [u8; 3]) -> Option<Color> {
        self.entries.iter().find(|(_, v)| *v == rgb).map(|(c, _)| *c)
    }

    pub fn background(&self) -> [u8; 3] {
        self.background
    }
}

/// Rasterizes a layout. Deterministic: identical layout and palette yield
/// byte-identical pixels.
pub fn render(layout: &Layout, palette: &Palette) -> RasterImage {
    let mut img =
        RasterImage::filled(layout.canvas.width, layout.canvas.height, palette.background());
    for p in &layout.placements {
        let object = layout
            .source
            .object(p.object_id)
            .expect("layout places exactly the source objects");
        let rgb = palette.rgb(object.color);
        let (x0, y0, x1, y1) = p.bbox();
        let size = p.size as f64;
        let center_x = x0 as f64 + size / 2.0;
        let center_y = y0 as f64 + size / 2.0;

        for y in y0.max(0)..=y1.min(img.height as i32 - 1) {
            for x in x0.max(0)..=x1.min(img.width as i32 - 1) {
                let px = x as f64 + 0.5;
                let py = y as f64 + 0.5;
                let inside = match object.shape {
                    Shape::Cube => true,
                    Shape::Sphere => {
                        let dx = px - center_x;
                        let dy = py - center_y;
                        dx * dx + dy * dy <= (size / 2.0) * (size / 2.0)
                    }
                    Shape::Triangle => {
                        // Apex at top center, base along the bottom edge.
                        let t = (py - y0 as f64) / size;
                        (0.0..=1.0).contains(&t) && (px - center_x).abs() <= (size / 2.0) * t
                    }
                };
                if inside {
                    img.set(x as u32, y as u32, rgb);
                }
            }
        }
    }
    img
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed ppm at byte {offset}: {message}")]
pub struct MalformedPpm {
    pub offset: usize,
    pub message: String,
}

/// Encodes as binary PPM: `P6\n<w> <h>\n255\n` then raw RGB rows.
pub fn encode_ppm(img: &RasterImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

/// Decodes a binary PPM stream produced by [`encode_ppm`] (or any P6 file
/// with maxval 255 and whitespace-separated header fields).
pub fn decode_ppm(bytes: &[u8]) -> Result<RasterImage, MalformedPpm> {
    let err = |offset: usize, message: &str| MalformedPpm { offset, message: message.into() };

    if !bytes.starts_with(b"P6") {
        return Err(err(0, "missing P6 magic"));
    }
    if bytes.len() < 3 || !bytes[2].is_ascii_whitespace() {
        return Err(err(2, "expected whitespace after magic"));
    }
    let mut pos = 2usize;
    let mut fields = [0u32; 3];
    for field in fields.iter_mut() {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(err(pos, "expected header integer"));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("digits are utf8");
        *field = text.parse().map_err(|_| err(start, "header integer out of range"))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(err(pos, "maxval must be 255"));
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(err(pos, "expected single whitespace after maxval"));
    }
    pos += 1;

    let expected = width as usize * height as usize * 3;
    let data = &bytes[pos..];
    if data.len() != expected {
        return Err(err(
            pos + data.len().min(expected),
            "pixel payload length does not match header",
        ));
    }
    Ok(RasterImage { width, height, pixels: data.to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{Canvas, Layout, Placement};
    use crate::tuple::{ObjectTuple, StructuredInfo};

    fn one_object_layout(color: Color, shape: Shape, size: u32) -> Layout {
        let canvas = Canvas::new(512, 512, 10).unwrap();
        Layout {
            canvas,
            placements: vec![Placement { object_id: 1, cx: 256, cy: 256, size }],
            source: StructuredInfo::new(vec![ObjectTuple::new(1, color, shape)], vec![]),
        }
    }

    fn count_color(img: &RasterImage, rgb: [u8; 3]) -> usize {
        img.pixels.chunks_exact(3).filter(|p| *p == rgb).count()
    }

    #[test]
    fn cube_fills_exactly_its_square() {
        let img = render(&one_object_layout(Color::Red, Shape::Cube, 64), Palette::standard());
        assert_eq!(count_color(&img, [255, 0, 0]), 64 * 64);
    }

    #[test]
    fn triangle_fill_ratio_approaches_half() {
        for size in [64u32, 128, 256] {
            let img =
                render(&one_object_layout(Color::Blue, Shape::Triangle, size), Palette::standard());
            let filled = count_color(&img, [0, 0, 255]) as f64;
            let ratio = filled / (size as f64 * size as f64);
            assert!(
                (ratio - 0.5).abs() <= 2.0 / size as f64,
                "size {size}: ratio {ratio}"
            );
        }
    }

    #[test]
    fn sphere_fill_ratio_matches_independent_pixel_test() {
        let size = 64u32;
        let img =
            render(&one_object_layout(Color::Green, Shape::Sphere, size), Palette::standard());
        let filled = count_color(&img, [0, 128, 0]) as f64;
        let ratio = filled / (size as f64 * size as f64);
        assert!((ratio - std::f64::consts::FRAC_PI_4).abs() <= 0.02, "ratio {ratio}");

        // Independent count: test every canvas pixel against the circle
        // equation directly.
        let (cx, cy, r) = (256.0, 256.0, size as f64 / 2.0);
        let mut oracle = 0usize;
        for y in 0..512u32 {
            for x in 0..512u32 {
                let dx = x as f64 + 0.5 - cx;
                let dy = y as f64 + 0.5 - cy;
                if dx * dx + dy * dy <= r * r {
                    oracle += 1;
                }
            }
        }
        assert_eq!(filled as usize, oracle);
    }

    #[test]
    fn foreground_stays_inside_declared_bbox() {
        for shape in Shape::ALL {
            let layout = one_object_layout(Color::Purple, shape, 64);
            let img = render(&layout, Palette::standard());
            let (x0, y0, x1, y1) = layout.placements[0].bbox();
            for y in 0..img.height {
                for x in 0..img.width {
                    if img.pixel(x, y) != [255, 255, 255] {
                        assert!(
                            (x as i32) >= x0 && (x as i32) <= x1
                                && (y as i32) >= y0 && (y as i32) <= y1,
                            "{shape} leaked at ({x},{y})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn every_pixel_is_background_or_pure_palette() {
        let layout = one_object_layout(Color::Cyan, Shape::Sphere, 64);
        let img = render(&layout, Palette::standard());
        for p in img.pixels.chunks_exact(3) {
            let rgb = [p[0], p[1], p[2]];
            assert!(
                rgb == [255, 255, 255] || Palette::standard().color_of(rgb).is_some(),
                "{rgb:?}"
            );
        }
    }

    #[test]
    fn palette_channel_separation_is_at_least_64() {
        let mut all: Vec<[u8; 3]> = Color::ALL
            .into_iter()
            .map(|c| Palette::standard().rgb(c))
            .collect();
        all.push(Palette::standard().background());
        for (i, a) in all.iter().enumerate() {
            for b in &all[i + 1..] {
                assert_ne!(a, b);
                for ch in 0..3 {
                    let d = (a[ch] as i16 - b[ch] as i16).abs();
                    assert!(d == 0 || d >= 64, "{a:?} vs {b:?} channel {ch}");
                }
            }
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let layout = one_object_layout(Color::Yellow, Shape::Triangle, 48);
        let a = encode_ppm(&render(&layout, Palette::standard()));
        let b = encode_ppm(&render(&layout, Palette::standard()));
        assert_eq!(a, b);
    }

    #[test]
    fn tiny_ppm_bytes_are_exact() {
        let img = RasterImage::filled(1, 1, [255, 255, 255]);
        assert_eq!(encode_ppm(&img), b"P6\n1 1\n255\n\xff\xff\xff");
    }

    #[test]
    fn ppm_round_trips_rendered_scene() {
        let img = render(&one_object_layout(Color::Brown, Shape::Cube, 32), Palette::standard());
        let bytes = encode_ppm(&img);
        assert_eq!(decode_ppm(&bytes).unwrap(), img);
    }

    #[test]
    fn truncated_ppm_is_rejected() {
        let img = RasterImage::filled(2, 2, [1, 2, 3]);
        let mut bytes = encode_ppm(&img);
        bytes.truncate(bytes.len() - 1);
        assert!(decode_ppm(&bytes).is_err());
        assert!(decode_ppm(b"P5\n1 1\n255\n...").is_err());
    }
}
