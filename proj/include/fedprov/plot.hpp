#pragma once

#include <filesystem>
#include <string>

#include "fedprov/evaluation.hpp"

namespace fedprov {

/// Standalone SVG reliability diagram: occupied bins joined by a polyline,
/// the y = x diagonal as reference, ECE in the title.
std::string calibration_svg(const CalibrationCurve& curve, const std::string& title);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace fedprov
