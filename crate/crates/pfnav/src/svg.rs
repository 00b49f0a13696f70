//! SVG overlay of terrain shading, regions and planned paths.

use std::fmt::Write as _;

use pfnav_core::terrain::{Domain, Region, TerrainGrid};
use pfnav_core::Vec2;

pub struct Polyline<'a> {
    pub points: &'a [Vec2],
    pub color: &'a str,
    pub label: &'a str,
}

const WIDTH_PX: f64 = 600.0;
const SHADE_CELLS: usize = 80;

fn fmt(v: f64) -> String {
    format!("{:.2}", v)
}

pub fn render(grid: &TerrainGrid, domain: &Domain, lines: &[Polyline]) -> String {
    let (lo, hi) = (domain.bounds_min, domain.bounds_max);
    let scale = WIDTH_PX / (hi.x - lo.x);
    let height_px = (hi.y - lo.y) * scale;
    let px = |p: Vec2| ((p.x - lo.x) * scale, (hi.y - p.y) * scale);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = fmt(WIDTH_PX),
        h = fmt(height_px)
    );

    // Darker means less traversable.
    let (nx, ny) = (SHADE_CELLS, SHADE_CELLS);
    let (cw, ch) = ((hi.x - lo.x) / nx as f64, (hi.y - lo.y) / ny as f64);
    out.push_str("<g shape-rendering=\"crispEdges\">\n");
    for j in 0..ny {
        for i in 0..nx {
            let c = Vec2::new(lo.x + (i as f64 + 0.5) * cw, lo.y + (j as f64 + 0.5) * ch);
            let p = grid.traversability(c).unwrap_or(0.0);
            let g = (255.0 * (1.0 - 0.85 * p)).round() as u8;
            let (x, y) = px(Vec2::new(c.x - 0.5 * cw, c.y + 0.5 * ch));
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="rgb({g},{g},{g})"/>"#,
                fmt(x),
                fmt(y),
                fmt(cw * scale + 0.05),
                fmt(ch * scale + 0.05)
            );
        }
    }
    out.push_str("</g>\n");

    let mut region = |r: &Region, fill: &str, label: &str| {
        match *r {
            Region::Disc { center, radius } => {
                let (x, y) = px(center);
                let _ = writeln!(
                    out,
                    r#"<circle cx="{}" cy="{}" r="{}" fill="{fill}" fill-opacity="0.6" stroke="black"><title>{label}</title></circle>"#,
                    fmt(x),
                    fmt(y),
                    fmt(radius * scale)
                );
            }
            Region::Box { min, max } => {
                let (x, y) = px(Vec2::new(min.x, max.y));
                let _ = writeln!(
                    out,
                    r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}" fill-opacity="0.6" stroke="black"><title>{label}</title></rect>"#,
                    fmt(x),
                    fmt(y),
                    fmt((max.x - min.x) * scale),
                    fmt((max.y - min.y) * scale)
                );
            }
        }
    };
    for o in &domain.obstacles {
        region(o, "#b03030", "obstacle");
    }
    region(&domain.initial, "#3070d0", "initial set");
    region(&domain.target, "#30a050", "target set");

    for line in lines {
        if line.points.is_empty() {
            continue;
        }
        let pts: Vec<String> = line.points.iter().map(|p| {
            let (x, y) = px(*p);
            format!("{},{}", fmt(x), fmt(y))
        }).collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2.5"><title>{}</title></polyline>"#,
            pts.join(" "),
            line.color,
            line.label
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_has_shading_regions_and_paths() {
        let grid = TerrainGrid::new(3, 3, 2.0, Vec2::ZERO, vec![0.0, 1.0, 2.0, 0.0, 1.0, 2.0, 0.0, 1.0, 2.0]).unwrap();
        let domain = Domain {
            bounds_min: Vec2::ZERO,
            bounds_max: Vec2::new(4.0, 4.0),
            initial: Region::Disc { center: Vec2::new(0.5, 0.5), radius: 0.3 },
            target: Region::Box { min: Vec2::new(3.0, 3.0), max: Vec2::new(4.0, 4.0) },
            obstacles: vec![Region::Disc { center: Vec2::new(2.0, 2.0), radius: 0.5 }],
        };
        let pts = [Vec2::new(0.5, 0.5), Vec2::new(4.0, 4.0)];
        let svg = render(&grid, &domain, &[Polyline { points: &pts, color: "#123456", label: "route" }, Polyline { points: &[], color: "red", label: "none" }]);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        // Top left of the image is (0, 4), so the last point maps to (600, 0).
        assert!(svg.contains(r#"points="75.00,525.00 600.00,0.00""#), "{svg}");
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("<title>target set</title></rect>"));
        assert_eq!(svg.matches("fill=\"rgb(").count(), SHADE_CELLS * SHADE_CELLS);
    }
}
