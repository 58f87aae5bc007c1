#pragma once

#include <string>
#include <vector>

namespace miml {

struct RasterImage {
    int width = 0;
    int height = 0;
    int channels = 1;  // 1 or 3
    std::vector<double> pixels;  // row-major, interleaved channels, values in [0,1]

    double at(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

enum class PartialPolicy { drop_partial, zero_pad };

struct PatchSpec {
    int size = 448;
    PartialPolicy policy = PartialPolicy::drop_partial;
};

// Non-overlapping size x size blocks in row-major grid order.
std::vector<RasterImage> partition(const RasterImage& image, const PatchSpec& spec);

// Per-channel normalized intensity histogram plus
// [mean, stddev, fraction > 0.5, gradient-magnitude mean].
// D = channels*bins + 4.
std::vector<double> featurize(const RasterImage& patch, int bins = 8);

// 8-bit binary PGM (P5) / PPM (P6), scaled to [0,1].
RasterImage read_pnm(const std::string& path);
void write_pnm(const RasterImage& image, const std::string& path);

}  // namespace miml
