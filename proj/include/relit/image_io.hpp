// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <string>

#include "relit/image.hpp"

namespace relit {

// PNG carries LDR data: load applies the sRGB EOTF, save encodes and clamps
// to [0,1]. 8- and 16-bit gray/RGB/RGBA inputs are accepted (alpha dropped);
// save always writes 8-bit.
RadianceImage load_png(const std::string &path);
void save_png(const RadianceImage &img, const std::string &path);

// PFM carries HDR data losslessly ("PF" = 3 channels, "Pf" = 1).
// Header: "PF\n{W} {H}\n{scale}\n"; negative scale means little-endian
// payload; rows are stored bottom-to-top.
RadianceImage load_pfm(const std::string &path);
void save_pfm(const RadianceImage &img, const std::string &path);

// Dispatches on extension (.png / .pfm).
RadianceImage load_image(const std::string &path);
void save_image(const RadianceImage &img, const std::string &path);

}  // namespace relit
