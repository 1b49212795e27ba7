// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "appeal/backends.hpp"
#include "appeal/domain.hpp"
#include "appeal/image.hpp"
#include "appeal/util.hpp"

namespace appeal {

/// Pipeline position of an ingested image. Transitions only move forward:
/// fetched -> {filtered_caption, filtered_area, kept}; kept -> dropped_balance.
enum class RecordStatus { fetched, filtered_caption, filtered_area, kept, dropped_balance };

std::string_view to_string(RecordStatus s) noexcept;
RecordStatus status_from_string(std::string_view s);

struct ImageRecord {
    std::string id;       ///< content hash of the fetched pixels
    std::string source;   ///< image-source backend id
    SearchQuery query;
    int rank = 1;
    std::string path;     ///< relative to the work directory
    int width = 0;
    int height = 0;
    std::optional<std::string> caption;
    std::optional<double> relevancy_fraction;
    RecordStatus status = RecordStatus::fetched;

    friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

json to_json(const ImageRecord& r);
ImageRecord record_from_json(const json& j);

/// Moves `r` to `next`, rejecting backward or sideways transitions.
void advance_status(ImageRecord& r, RecordStatus next);

/// Image files under `<workdir>/<domain>/<stage>/<id>.png`.
class ImageStore {
public:
    ImageStore(std::filesystem::path workdir, std::string domain)
        : workdir_(std::move(workdir)), domain_(std::move(domain)) {}

    const std::filesystem::path& workdir() const noexcept { return workdir_; }
    std::filesystem::path stage_dir(std::string_view stage) const { return workdir_ / domain_ / stage; }
    /// Path relative to the workdir, as stored in manifests.
    std::string relative_path(std::string_view stage, std::string_view id) const;
    std::filesystem::path absolute(std::string_view relative) const { return workdir_ / relative; }

    std::string save(std::string_view stage, std::string_view id, const Image& image) const;
    std::string save_field(std::string_view stage, std::string_view id, const ScalarField& field) const;
    Image load(std::string_view relative) const { return read_png(absolute(relative)); }
    ScalarField load_field(std::string_view relative) const { return read_png_gray(absolute(relative)); }

private:
    std::filesystem::path workdir_;
    std::string domain_;
};

struct FetchError {
    std::string query;
    std::string source;
    int rank = 0;  ///< 0 when the whole query failed
    std::string message;
};

json to_json(const FetchError& e);

struct FetchResult {
    std::vector<ImageRecord> records;
    std::vector<FetchError> errors;
    std::vector<std::string> warnings;
};

/// Retrieves up to `top_k` results per query, keeps the first occurrence of
/// each pixel-content hash, and stores images under `stage`.
FetchResult fetch_thumbnails(std::span<const SearchQuery> queries, ImageSource& client, int top_k,
                             const ImageStore& store, std::string_view stage = "fetch");

/// Size and placement of the content region inside the square output.
struct NormalizeGeometry {
    int content_width = 0;
    int content_height = 0;
    int pad_left = 0;
    int pad_top = 0;
    int output_size = 0;
};

/// The longer side maps to `output_size`; the shorter side rounds to the
/// nearest length with the same parity as `output_size` so padding is equal
/// on both sides.
NormalizeGeometry normalize_geometry(int width, int height, int output_size);

/// Super-resolves until the longest side reaches `output_size`, resizes the
/// longest side to exactly `output_size`, then zero-pads symmetrically.
Image normalize_image(const Image& image, Upscaler& upscaler, int output_size);

/// Applies the same geometry to a scalar map (bilinear + zero padding).
ScalarField normalize_field(const ScalarField& field, int output_size);

/// Loads the record's image, normalizes it into `stage`, updates path and size.
/// Undecodable images raise; callers drop the record.
ImageRecord normalize_record(const ImageRecord& record, const ImageStore& store, Upscaler& upscaler,
                             int output_size, std::string_view stage = "normalized");

}  // namespace appeal
