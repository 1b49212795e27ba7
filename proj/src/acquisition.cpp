// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#include "appeal/acquisition.hpp"

#include <cmath>
#include <set>

#include <spdlog/spdlog.h>

#include "appeal/error.hpp"

namespace appeal {

std::string_view to_string(RecordStatus s) noexcept {
    switch (s) {
        case RecordStatus::fetched: return "fetched";
        case RecordStatus::filtered_caption: return "filtered_caption";
        case RecordStatus::filtered_area: return "filtered_area";
        case RecordStatus::kept: return "kept";
        case RecordStatus::dropped_balance: return "dropped_balance";
    }
    return "?";
}

RecordStatus status_from_string(std::string_view s) {
    for (auto st : {RecordStatus::fetched, RecordStatus::filtered_caption, RecordStatus::filtered_area,
                    RecordStatus::kept, RecordStatus::dropped_balance})
        if (to_string(st) == s) return st;
    throw ValidationError("status", "unknown status '" + std::string(s) + "'");
}

json to_json(const ImageRecord& r) {
    json j{{"id", r.id},     {"source", r.source}, {"query", to_json(r.query)},         {"rank", r.rank},
           {"path", r.path}, {"width", r.width},   {"height", r.height}};
    j["caption"] = r.caption ? json(*r.caption) : json(nullptr);
    j["relevancy_fraction"] = r.relevancy_fraction ? json(*r.relevancy_fraction) : json(nullptr);
    j["status"] = to_string(r.status);
    return j;
}

ImageRecord record_from_json(const json& j) {
    ImageRecord r;
    r.id = j.at("id").get<std::string>();
    r.source = j.at("source").get<std::string>();
    r.query = query_from_json(j.at("query"));
    r.rank = j.at("rank").get<int>();
    r.path = j.at("path").get<std::string>();
    r.width = j.at("width").get<int>();
    r.height = j.at("height").get<int>();
    if (j.contains("caption") && !j["caption"].is_null()) r.caption = j["caption"].get<std::string>();
    if (j.contains("relevancy_fraction") && !j["relevancy_fraction"].is_null())
        r.relevancy_fraction = j["relevancy_fraction"].get<double>();
    r.status = status_from_string(j.at("status").get<std::string>());
    if (r.rank < 1) throw ValidationError("rank", "must be >= 1");
    return r;
}

void advance_status(ImageRecord& r, RecordStatus next) {
    using S = RecordStatus;
    const bool ok = (r.status == S::fetched &&
                     (next == S::filtered_caption || next == S::filtered_area || next == S::kept)) ||
                    (r.status == S::kept && next == S::dropped_balance) || r.status == next;
    if (!ok)
        throw ValidationError("status", "illegal transition " + std::string(to_string(r.status)) +
                                            " -> " + std::string(to_string(next)) + " for " + r.id);
    r.status = next;
}

std::string ImageStore::relative_path(std::string_view stage, std::string_view id) const {
    return (std::filesystem::path(domain_) / stage / (std::string(id) + ".png")).string();
}

std::string ImageStore::save(std::string_view stage, std::string_view id, const Image& image) const {
    auto rel = relative_path(stage, id);
    auto abs = absolute(rel);
    std::filesystem::create_directories(abs.parent_path());
    write_png(abs, image);
    return rel;
}

std::string ImageStore::save_field(std::string_view stage, std::string_view id,
                                   const ScalarField& field) const {
    auto rel = relative_path(stage, id);
    auto abs = absolute(rel);
    std::filesystem::create_directories(abs.parent_path());
    write_png_gray(abs, field);
    return rel;
}

json to_json(const FetchError& e) {
    return {{"query", e.query}, {"source", e.source}, {"rank", e.rank}, {"message", e.message}};
}

FetchResult fetch_thumbnails(std::span<const SearchQuery> queries, ImageSource& client, int top_k,
                             const ImageStore& store, std::string_view stage) {
    if (top_k < 1) throw ValidationError("top_k", "must be >= 1");

    struct PerQuery {
        std::vector<SourceHit> hits;
        std::string failure;
    };
    std::vector<PerQuery> results(queries.size());
    const auto n = static_cast<std::ptrdiff_t>(queries.size());
    const bool parallel = client.traits().reentrant;
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            results[i].hits = client.search(queries[i], top_k);
        } catch (const std::exception& e) {
            results[i].failure = e.what();
        }
    }

    FetchResult out;
    std::set<std::string> seen;
    const std::string source = client.id();
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const auto& q = queries[i];
        auto& res = results[i];
        if (!res.failure.empty()) {
            out.errors.push_back({q.text, source, 0, res.failure});
            continue;
        }
        if (res.hits.empty()) {
            out.warnings.push_back("no results for query '" + q.text + "'");
            spdlog::warn("no results for query '{}'", q.text);
            continue;
        }
        int taken = 0;
        for (auto& hit : res.hits) {
            if (taken++ >= top_k) break;
            if (!hit.image) {
                out.errors.push_back({q.text, source, hit.rank, hit.error.empty() ? "no image" : hit.error});
                continue;
            }
            ImageRecord r;
            r.id = content_hash(*hit.image);
            if (!seen.insert(r.id).second) continue;
            r.source = source;
            r.query = q;
            r.rank = std::max(hit.rank, 1);
            r.width = hit.image->width();
            r.height = hit.image->height();
            r.path = store.save(stage, r.id, *hit.image);
            out.records.push_back(std::move(r));
        }
    }
    return out;
}

NormalizeGeometry normalize_geometry(int width, int height, int output_size) {
    if (width <= 0 || height <= 0 || output_size <= 0)
        throw ValidationError("output_size", "image and output sizes must be positive");
    const int longest = std::max(width, height);
    const int shortest = std::min(width, height);
    const double exact = static_cast<double>(output_size) * shortest / longest;
    const int parity = output_size % 2;
    int side = static_cast<int>(std::floor((exact - parity) / 2.0 + 0.5)) * 2 + parity;
    side = std::clamp(side, parity == 0 ? 2 : 1, output_size);
    if (shortest == longest) side = output_size;
    NormalizeGeometry g;
    g.output_size = output_size;
    g.content_width = width >= height ? output_size : side;
    g.content_height = width >= height ? side : output_size;
    g.pad_left = (output_size - g.content_width) / 2;
    g.pad_top = (output_size - g.content_height) / 2;
    return g;
}

Image normalize_image(const Image& image, Upscaler& upscaler, int output_size) {
    if (image.empty()) throw ValidationError("image", "empty image");
    if (image.width() == output_size && image.height() == output_size) return image;
    Image work = image;
    while (std::max(work.width(), work.height()) < output_size) {
        Image up = upscaler.upscale(work);
        if (up.width() <= work.width() && up.height() <= work.height())
            throw BackendError("upscaler " + upscaler.id() + " did not enlarge the image", false);
        work = std::move(up);
    }
    const auto g = normalize_geometry(image.width(), image.height(), output_size);
    const Image content = resize_area(work, g.content_width, g.content_height);
    Image out(output_size, output_size);
    for (int y = 0; y < g.content_height; ++y)
        for (int x = 0; x < g.content_width; ++x) out.set(x + g.pad_left, y + g.pad_top, content.pixel(x, y));
    return out;
}

ScalarField normalize_field(const ScalarField& field, int output_size) {
    if (field.width() == output_size && field.height() == output_size) return field;
    const auto g = normalize_geometry(field.width(), field.height(), output_size);
    const ScalarField content = resize_bilinear(field, g.content_width, g.content_height);
    ScalarField out(output_size, output_size);
    for (int y = 0; y < g.content_height; ++y)
        for (int x = 0; x < g.content_width; ++x) out.at(x + g.pad_left, y + g.pad_top) = content.at(x, y);
    return out;
}

ImageRecord normalize_record(const ImageRecord& record, const ImageStore& store, Upscaler& upscaler,
                             int output_size, std::string_view stage) {
    const Image src = store.load(record.path);
    ImageRecord out = record;
    out.path = store.save(stage, record.id, normalize_image(src, upscaler, output_size));
    out.width = output_size;
    out.height = output_size;
    return out;
}

}  // namespace appeal
