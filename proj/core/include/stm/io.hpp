#pragma once

// Dataset ingestion, anchor files, model persistence and PGM export.
//
// Model file layout (all integers and floats little-endian):
//
//   char[4]  magic "STM1"
//   u16      format version
//   u8       grid rank (1 or 2), then u32 per extent
//   u32      input dimension M
//   u8       algorithm tag (0 kmeans, 1 som, 2 stm, 3 lvq)
//   f64      sigma_r, f64 sigma_t
//   u64      seed
//   f64      K * M weights, row-major
//   u32      anchor count, then per anchor: u16 label length, label bytes, rank * f64
//
// Anchor files are plain text:
//
//   # comment
//   grid 10 10          (or "grid K" for a 1D lattice)
//   <label> <row> <col> (or "<label> <index>")

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "stm/grid.hpp"
#include "stm/trainers.hpp"
#include "stm/wta.hpp"

namespace stm {

inline constexpr std::uint16_t kModelFormatVersion = 1;
inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// IDX images (bytes scaled by 1/255) with optional IDX labels rendered as decimal strings.
Dataset load_idx(const std::filesystem::path& images,
                 const std::optional<std::filesystem::path>& labels = std::nullopt);

/// CSV with a header row. Every column except `label_column` must be numeric.
Dataset load_csv(const std::filesystem::path& path,
                 const std::optional<std::string>& label_column = std::nullopt);

/// Every *.pgm file of a directory (sorted by name) as one row, bytes scaled by 1/255.
/// With `labels_from_names`, the label is the file name up to its first '_'.
Dataset load_pgm_directory(const std::filesystem::path& dir, bool labels_from_names = false);

struct PgmImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;  // row-major, height * width
    std::string comment;               // written as a single '#' header line when non-empty
};

PgmImage read_pgm(const std::filesystem::path& path);
void write_pgm(const PgmImage& image, const std::filesystem::path& path);

struct ModelFile {
    Codebook codebook;
    WtaKind kind;
    std::uint64_t seed = 0;
    LabelAnchors anchors;
};

void save_model(const ModelFile& model, const std::filesystem::path& path);
ModelFile load_model(const std::filesystem::path& path);

LabelAnchors parse_anchors(std::istream& in, const GridTopology& topo,
                           const std::string& source = "<anchors>");
LabelAnchors load_anchors(const std::filesystem::path& path, const GridTopology& topo);

/// Tiles `patterns` (each reshaped to tile_rows x tile_cols) on a grid_rows x grid_cols sheet.
/// Values are min-max scaled to [0, 255] over the whole matrix; tiles are separated and
/// framed by 1-pixel white lines, so the sheet is
/// (grid_cols * (tile_cols + 1) + 1) x (grid_rows * (tile_rows + 1) + 1) pixels.
PgmImage tile_patterns(const Matrix& patterns, std::size_t tile_rows, std::size_t tile_cols,
                       std::size_t grid_rows, std::size_t grid_cols);

/// Prototype sheet with every unit drawn at its lattice position (1D maps use one row).
PgmImage prototype_grid_image(const Codebook& cb, std::size_t tile_rows, std::size_t tile_cols);
void export_prototype_grid(const Codebook& cb, std::size_t tile_rows, std::size_t tile_cols,
                           const std::filesystem::path& path);

void write_history_csv(const TrainingHistory& history, const std::filesystem::path& path);
void write_matrix_csv(const Matrix& m, std::ostream& out);

}  // namespace stm
