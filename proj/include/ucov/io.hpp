#pragma once

#include "ucov/spaces.hpp"
#include "ucov/tensor.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace ucov::io {

/// Shortest text that round-trips the double (%.17g).
std::string format_double(double v);

/// One row per element, coordinates comma-separated, no header.
void write_sample_csv(std::ostream& out, const Sample& sample);
Sample read_sample_csv(const std::filesystem::path& path, NormKind norm = NormKind::L2);

/// Single CSV row, e.g. a theta file.
Element read_element_csv(const std::filesystem::path& path, const SpaceDescriptor& space);

/// Row-major grid, one grid row per line.
void write_tensor_csv(std::ostream& out, const TensorRep& t);

nlohmann::json to_json(const SpaceDescriptor& space);
SpaceDescriptor space_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TensorRep& t);
nlohmann::json to_json(const NormResult& r);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace ucov::io
