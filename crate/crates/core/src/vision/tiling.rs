use super::image::{resize_longest_edge, RawImage};
use super::{Result, VisionError};

/// Largest grid extent along either axis.
pub const MAX_GRID: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tile {
    pub row: usize,
    pub col: usize,
    pub image: RawImage,
}

/// Row/column extents of a tiling; `0 × 0` means the image was global-only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridLayout {
    pub rows: usize,
    pub cols: usize,
}

impl GridLayout {
    pub fn tile_count(&self) -> usize {
        self.rows * self.cols
    }

    /// Sub-images including the global view.
    pub fn sub_images(&self) -> usize {
        self.tile_count() + 1
    }
}

/// Square tiles in raster order plus one downsized view of the whole image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileGrid {
    tiles: Vec<Tile>,
    global: RawImage,
    rows: usize,
    cols: usize,
    tile_size: usize,
}

impl TileGrid {
    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    pub fn global(&self) -> &RawImage {
        &self.global
    }

    pub fn layout(&self) -> GridLayout {
        GridLayout {
            rows: self.rows,
            cols: self.cols,
        }
    }

    pub fn tile_size(&self) -> usize {
        self.tile_size
    }

    /// Tiles then the global image, the order in which they are encoded.
    pub fn sub_images(&self) -> impl Iterator<Item = &RawImage> {
        self.tiles.iter().map(|t| &t.image).chain(std::iter::once(&self.global))
    }

    /// Pastes the tiles back together; `None` for a global-only grid.
    pub fn reassemble(&self) -> Option<RawImage> {
        if self.tiles.is_empty() {
            return None;
        }
        let s = self.tile_size;
        let mut canvas = RawImage::filled(self.cols * s, self.rows * s, [0, 0, 0]).ok()?;
        for tile in &self.tiles {
            for y in 0..s {
                for x in 0..s {
                    canvas.set_pixel(tile.col * s + x, tile.row * s + y, tile.image.pixel(x, y));
                }
            }
        }
        Some(canvas)
    }
}

/// Grid extents for an image of `width × height` (already capped).
///
/// Images that fit in a single tile get no tiles at all. Otherwise each side
/// is rounded up to a whole number of tiles, at most [`MAX_GRID`] per side.
pub fn grid_layout(width: usize, height: usize, tile_size: usize) -> GridLayout {
    if width <= tile_size && height <= tile_size {
        return GridLayout { rows: 0, cols: 0 };
    }
    GridLayout {
        rows: height.div_ceil(tile_size).min(MAX_GRID),
        cols: width.div_ceil(tile_size).min(MAX_GRID),
    }
}

/// The image resized to exactly cover its tile grid, or `None` when global-only.
pub fn tiling_canvas(img: &RawImage, tile_size: usize) -> Result<Option<RawImage>> {
    check_tile_size(tile_size)?;
    let layout = grid_layout(img.width(), img.height(), tile_size);
    if layout.tile_count() == 0 {
        return Ok(None);
    }
    img.resize(layout.cols * tile_size, layout.rows * tile_size).map(Some)
}

fn check_tile_size(tile_size: usize) -> Result<()> {
    if tile_size == 0 {
        return Err(VisionError::InvalidArgument("tile size must be at least 1".into()));
    }
    Ok(())
}

/// Splits an image into `tile_size²` sub-images plus a downsized global view.
pub fn split_into_tiles(img: &RawImage, tile_size: usize) -> Result<TileGrid> {
    check_tile_size(tile_size)?;
    let global = img.resize(tile_size, tile_size)?;
    let layout = grid_layout(img.width(), img.height(), tile_size);
    let mut tiles = Vec::with_capacity(layout.tile_count());
    if let Some(canvas) = tiling_canvas(img, tile_size)? {
        for row in 0..layout.rows {
            for col in 0..layout.cols {
                let image = canvas.crop(col * tile_size, row * tile_size, tile_size, tile_size)?;
                tiles.push(Tile { row, col, image });
            }
        }
    }
    Ok(TileGrid {
        tiles,
        global,
        rows: layout.rows,
        cols: layout.cols,
        tile_size,
    })
}

/// Longest-edge cap followed by tiling: the full image path of the frontend.
pub fn preprocess_image(img: &RawImage, longest_edge_cap: usize, tile_size: usize) -> Result<TileGrid> {
    split_into_tiles(&resize_longest_edge(img, longest_edge_cap)?, tile_size)
}
