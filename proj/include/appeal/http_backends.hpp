// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

// Thin JSON-over-HTTP adapters for real model servers (captioning,
// phrase segmentation, inpainting, inversion, super-resolution, depth,
// encoders, image search). Images travel as base64 PNG.
//
//   POST <url>/caption  {model, image, image_id}                  -> {caption}
//   POST <url>/segment  {model, image, phrase}                    -> {mask}
//   POST <url>/inpaint  {model, image, mask, prompt, token, ...}  -> {image}
//   POST <url>/invert   {model, images, ids, polarity, ...}       -> {vector}
//   POST <url>/upscale  {model, image}                            -> {image}
//   POST <url>/depth    {model, image}                            -> {depth}
//   POST <url>/encode   {model, image}                            -> {features}
//   POST <url>/search   {model, query, top_k}                     -> {results: [{rank, image|error, origin}]}

#pragma once

#include <memory>
#include <string>

#include "appeal/backends.hpp"

namespace appeal::http {

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Options: url (required), model, timeout_s, deterministic, plus role-specific
/// keys (dimension for encoder/inversion, factor for upscaler).
std::shared_ptr<Backend> make_http_backend(Role role, const json& options);

}  // namespace appeal::http
