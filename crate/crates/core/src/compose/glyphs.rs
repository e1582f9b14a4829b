//! Fallback text templates: radiograph side markers and labels drawn from a
//! 5x7 bitmap font.

use crate::grid::{Grid, Image};

const GLYPH_W: usize = 5;
const GLYPH_H: usize = 7;

/// Pixels per font cell.
const CELL: usize = 4;

/// Words rendered into the built-in template set.
pub const BUILTIN_WORDS: [&str; 5] = ["R", "L", "AP", "PORTABLE", "SUPINE"];

fn glyph(c: char) -> Option<[&'static str; GLYPH_H]> {
    Some(match c {
        'A' => [".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"],
        'B' => ["####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."],
        'E' => ["#####", "#....", "#....", "####.", "#....", "#....", "#####"],
        'I' => ["#####", "..#..", "..#..", "..#..", "..#..", "..#..", "#####"],
        'L' => ["#....", "#....", "#....", "#....", "#....", "#....", "#####"],
        'N' => ["#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#", "#...#"],
        'O' => [".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."],
        'P' => ["####.", "#...#", "#...#", "####.", "#....", "#....", "#...."],
        'R' => ["####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"],
        'S' => [".####", "#....", "#....", ".###.", "....#", "....#", "####."],
        'T' => ["#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."],
        'U' => ["#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."],
        _ => return None,
    })
}

/// Renders `word` with ink 1 on a zero background and a one-cell margin.
/// Characters without a glyph render as blanks.
pub fn render_word(word: &str) -> Image {
    let n = word.chars().count().max(1);
    let cols = n * (GLYPH_W + 1) + 1;
    let rows = GLYPH_H + 2;
    let mut img = Grid::new(cols * CELL, rows * CELL);
    for (i, c) in word.chars().enumerate() {
        let Some(rows_bits) = glyph(c.to_ascii_uppercase()) else {
            continue;
        };
        let x0 = 1 + i * (GLYPH_W + 1);
        for (gy, bits) in rows_bits.iter().enumerate() {
            for (gx, b) in bits.bytes().enumerate() {
                if b != b'#' {
                    continue;
                }
                for dy in 0..CELL {
                    for dx in 0..CELL {
                        img[((x0 + gx) * CELL + dx, (1 + gy) * CELL + dy)] = 1.0;
                    }
                }
            }
        }
    }
    img
}

pub fn builtin_templates() -> Vec<Image> {
    BUILTIN_WORDS.iter().map(|w| render_word(w)).collect()
}
