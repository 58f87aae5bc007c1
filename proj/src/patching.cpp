#include "miml/patching.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace miml {

namespace {

void check_image(const RasterImage& img) {
    if (img.width < 1 || img.height < 1)
        throw std::invalid_argument("raster image must be at least 1x1");
    if (img.channels != 1 && img.channels != 3)
        throw std::invalid_argument("raster image must have 1 or 3 channels");
    if (img.pixels.size() !=
        static_cast<std::size_t>(img.width) * img.height * img.channels)
        throw std::invalid_argument("raster pixel buffer size mismatch");
}

RasterImage crop(const RasterImage& img, int x0, int y0, int size) {
    RasterImage out;
    out.width = size;
    out.height = size;
    out.channels = img.channels;
    out.pixels.resize(static_cast<std::size_t>(size) * size * img.channels, 0.0);
    for (int y = 0; y < size; ++y) {
        int sy = y0 + y;
        if (sy >= img.height) continue;  // zero_pad region stays 0
        for (int x = 0; x < size; ++x) {
            int sx = x0 + x;
            if (sx >= img.width) continue;
            for (int c = 0; c < img.channels; ++c)
                out.pixels[(static_cast<std::size_t>(y) * size + x) * img.channels + c] =
                    img.at(sx, sy, c);
        }
    }
    return out;
}

}  // namespace

std::vector<RasterImage> partition(const RasterImage& image, const PatchSpec& spec) {
    check_image(image);
    if (spec.size < 8) throw std::invalid_argument("patch size must be >= 8");

    int nx, ny;
    if (spec.policy == PartialPolicy::drop_partial) {
        nx = image.width / spec.size;
        ny = image.height / spec.size;
        if (nx == 0 || ny == 0)
            throw std::invalid_argument("image smaller than one patch under drop_partial");
    } else {
        nx = (image.width + spec.size - 1) / spec.size;
        ny = (image.height + spec.size - 1) / spec.size;
    }

    std::vector<RasterImage> patches;
    patches.reserve(static_cast<std::size_t>(nx) * ny);
    for (int gy = 0; gy < ny; ++gy)
        for (int gx = 0; gx < nx; ++gx)
            patches.push_back(crop(image, gx * spec.size, gy * spec.size, spec.size));
    return patches;
}

std::vector<double> featurize(const RasterImage& patch, int bins) {
    check_image(patch);
    if (bins < 1) throw std::invalid_argument("bins must be >= 1");

    const std::size_t npix = static_cast<std::size_t>(patch.width) * patch.height;
    std::vector<double> features;
    features.reserve(static_cast<std::size_t>(patch.channels) * bins + 4);

    for (int c = 0; c < patch.channels; ++c) {
        std::vector<double> hist(bins, 0.0);
        for (int y = 0; y < patch.height; ++y)
            for (int x = 0; x < patch.width; ++x) {
                double v = patch.at(x, y, c);
                int b = static_cast<int>(v * bins);
                if (b >= bins) b = bins - 1;
                hist[b] += 1.0;
            }
        for (double& h : hist) features.push_back(h / static_cast<double>(npix));
    }

    // Stats over the channel-averaged intensity.
    auto lum = [&](int x, int y) {
        double v = 0.0;
        for (int c = 0; c < patch.channels; ++c) v += patch.at(x, y, c);
        return v / patch.channels;
    };

    double sum = 0.0, sumsq = 0.0, above = 0.0, gradsum = 0.0;
    for (int y = 0; y < patch.height; ++y)
        for (int x = 0; x < patch.width; ++x) {
            double v = lum(x, y);
            sum += v;
            sumsq += v * v;
            if (v > 0.5) above += 1.0;
            double gx = (x + 1 < patch.width) ? lum(x + 1, y) - v : 0.0;
            double gy = (y + 1 < patch.height) ? lum(x, y + 1) - v : 0.0;
            gradsum += std::sqrt(gx * gx + gy * gy);
        }
    double mean = sum / static_cast<double>(npix);
    double var = sumsq / static_cast<double>(npix) - mean * mean;
    if (var < 0.0) var = 0.0;

    features.push_back(mean);
    features.push_back(std::sqrt(var));
    features.push_back(above / static_cast<double>(npix));
    features.push_back(gradsum / static_cast<double>(npix));
    return features;
}

RasterImage read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);

    auto next_token = [&]() -> std::string {
        std::string tok;
        char ch;
        while (in.get(ch)) {
            if (ch == '#') {
                while (in.get(ch) && ch != '\n') {}
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(ch))) {
                if (!tok.empty()) break;
                continue;
            }
            tok.push_back(ch);
        }
        if (tok.empty()) throw std::runtime_error(path + ": truncated PNM header");
        return tok;
    };

    std::string magic = next_token();
    int channels;
    if (magic == "P5") channels = 1;
    else if (magic == "P6") channels = 3;
    else throw std::runtime_error(path + ": unsupported PNM magic '" + magic + "'");

    int width = std::stoi(next_token());
    int height = std::stoi(next_token());
    int maxval = std::stoi(next_token());
    if (width < 1 || height < 1) throw std::runtime_error(path + ": bad PNM dimensions");
    if (maxval != 255) throw std::runtime_error(path + ": only maxval 255 supported");

    std::size_t n = static_cast<std::size_t>(width) * height * channels;
    std::vector<uint8_t> raw(n);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
        throw std::runtime_error(path + ": truncated PNM pixel data");

    RasterImage img;
    img.width = width;
    img.height = height;
    img.channels = channels;
    img.pixels.resize(n);
    for (std::size_t i = 0; i < n; ++i) img.pixels[i] = raw[i] / 255.0;
    return img;
}

void write_pnm(const RasterImage& image, const std::string& path) {
    check_image(image);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << (image.channels == 1 ? "P5" : "P6") << "\n"
        << image.width << " " << image.height << "\n255\n";
    for (double v : image.pixels) {
        double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        out.put(static_cast<char>(static_cast<int>(std::lround(c * 255.0))));
    }
}

}  // namespace miml
