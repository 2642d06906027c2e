#pragma once

#include <cstdint>
#include <span>

#include "bingpp/raster.hpp"

namespace bingpp::detail {

bool is_png(std::span<const std::uint8_t> bytes) noexcept;
bool is_jpeg(std::span<const std::uint8_t> bytes) noexcept;

/// Both throw Error{kCorruptPayload | kUnsupportedFormat}.
ColorImage decode_png(std::span<const std::uint8_t> bytes);
ColorImage decode_jpeg(std::span<const std::uint8_t> bytes);

}  // namespace bingpp::detail
