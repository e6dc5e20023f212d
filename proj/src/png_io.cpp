#include "smartbrush/png_io.hpp"

#include "smartbrush/error.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <memory>

namespace smartbrush::png {

namespace {

struct MemoryReader {
    const std::vector<std::uint8_t>* bytes;
    std::size_t offset = 0;
};

void read_from_memory(png_structp png_ptr, png_bytep out, png_size_t count) {
    auto* reader = static_cast<MemoryReader*>(png_get_io_ptr(png_ptr));
    if (reader->offset + count > reader->bytes->size()) png_error(png_ptr, "truncated PNG data");
    std::memcpy(out, reader->bytes->data() + reader->offset, count);
    reader->offset += count;
}

void write_to_vector(png_structp png_ptr, png_bytep data, png_size_t count) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png_ptr));
    out->insert(out->end(), data, data + count);
}

void flush_noop(png_structp) {}

void on_error(png_structp png_ptr, png_const_charp msg) {
    auto* message = static_cast<std::string*>(png_get_error_ptr(png_ptr));
    if (message) *message = msg;
    std::longjmp(png_jmpbuf(png_ptr), 1);
}

void on_warning(png_structp, png_const_charp) {}

Decoded decode_with(const std::function<void(png_structp)>& install_io, const std::string& source) {
    std::string message;
    png_structp png_ptr = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, on_error, on_warning);
    if (!png_ptr) fail(ErrorKind::Io, "png: cannot allocate read struct");
    png_infop info = png_create_info_struct(png_ptr);
    std::vector<std::uint8_t> buffer;
    std::vector<png_bytep> rows;
    Decoded result;

    if (setjmp(png_jmpbuf(png_ptr))) {
        png_destroy_read_struct(&png_ptr, &info, nullptr);
        fail(ErrorKind::Io, "unreadable image " + source + ": " + message);
    }
    install_io(png_ptr);
    png_read_info(png_ptr, info);

    const png_uint_32 width = png_get_image_width(png_ptr, info);
    const png_uint_32 height = png_get_image_height(png_ptr, info);
    const int color = png_get_color_type(png_ptr, info);
    int depth = png_get_bit_depth(png_ptr, info);

    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png_ptr);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png_ptr);
    if (png_get_valid(png_ptr, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png_ptr);
    if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png_ptr, info, PNG_INFO_tRNS)) png_set_strip_alpha(png_ptr);
    if (depth == 16) png_set_swap(png_ptr);  // host order; x86 is little-endian
    png_read_update_info(png_ptr, info);

    const int channels = png_get_channels(png_ptr, info);
    depth = png_get_bit_depth(png_ptr, info);
    const std::size_t rowbytes = png_get_rowbytes(png_ptr, info);
    buffer.resize(rowbytes * height);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = buffer.data() + y * rowbytes;
    png_read_image(png_ptr, rows.data());
    png_read_end(png_ptr, nullptr);
    png_destroy_read_struct(&png_ptr, &info, nullptr);

    const int out_channels = channels >= 3 ? 3 : 1;
    Tensor img = Tensor::image(out_channels, static_cast<int>(height), static_cast<int>(width));
    for (png_uint_32 y = 0; y < height; ++y) {
        for (png_uint_32 x = 0; x < width; ++x) {
            for (int c = 0; c < out_channels; ++c) {
                double v;
                if (depth == 16) {
                    std::uint16_t raw;
                    std::memcpy(&raw, rows[y] + (x * channels + c) * 2, 2);
                    v = raw / 65535.0;
                } else {
                    v = rows[y][x * channels + c] / 255.0;
                }
                img.at(c, static_cast<int>(y), static_cast<int>(x)) = v;
            }
        }
    }
    result.pixels = std::move(img);
    result.bit_depth = depth;
    return result;
}

std::vector<std::uint8_t> encode_impl(const Tensor& img, Format format) {
    if (img.rank() != 3) fail(ErrorKind::InvalidArgument, "png: expected a (C,H,W) image");
    const int want = format == Format::Rgb8 ? 3 : 1;
    if (img.channels() != want) {
        fail(ErrorKind::ShapeMismatch, "png: channel count " + std::to_string(img.channels()) +
                                           " does not match output format");
    }
    const int height = img.height();
    const int width = img.width();
    const int bytes_per_sample = format == Format::Gray16 ? 2 : 1;
    const std::size_t rowbytes = static_cast<std::size_t>(width) * want * bytes_per_sample;
    std::vector<std::uint8_t> pixels(rowbytes * height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            for (int c = 0; c < want; ++c) {
                const double v = img.at(c, y, x);
                std::uint8_t* dst = pixels.data() + y * rowbytes + (static_cast<std::size_t>(x) * want + c) * bytes_per_sample;
                if (format == Format::Gray16) {
                    const std::uint16_t code = to_u16(v);
                    dst[0] = static_cast<std::uint8_t>(code >> 8);  // PNG is big-endian
                    dst[1] = static_cast<std::uint8_t>(code & 0xff);
                } else {
                    dst[0] = to_u8(v);
                }
            }
        }
    }

    std::string message;
    std::vector<std::uint8_t> out;
    png_structp png_ptr = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, on_error, on_warning);
    if (!png_ptr) fail(ErrorKind::Io, "png: cannot allocate write struct");
    png_infop info = png_create_info_struct(png_ptr);
    std::vector<png_bytep> rows(height);
    if (setjmp(png_jmpbuf(png_ptr))) {
        png_destroy_write_struct(&png_ptr, &info);
        fail(ErrorKind::Io, "png encode failed: " + message);
    }
    png_set_write_fn(png_ptr, &out, write_to_vector, flush_noop);
    png_set_IHDR(png_ptr, info, width, height, bytes_per_sample * 8,
                 want == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png_ptr, info);
    for (int y = 0; y < height; ++y) rows[y] = pixels.data() + y * rowbytes;
    png_write_image(png_ptr, rows.data());
    png_write_end(png_ptr, nullptr);
    png_destroy_write_struct(&png_ptr, &info);
    return out;
}

}  // namespace

Decoded decode(const std::vector<std::uint8_t>& bytes) {
    MemoryReader reader{&bytes};
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) fail(ErrorKind::Io, "unreadable image: not a PNG");
    return decode_with([&](png_structp p) { png_set_read_fn(p, &reader, read_from_memory); }, "<memory>");
}

Decoded read(const std::filesystem::path& path) {
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(std::fopen(path.c_str(), "rb"), &std::fclose);
    if (!file) fail(ErrorKind::Io, "unreadable image " + path.string() + ": cannot open");
    std::vector<std::uint8_t> bytes;
    char chunk[1 << 15];
    std::size_t n;
    while ((n = std::fread(chunk, 1, sizeof chunk, file.get())) > 0) bytes.insert(bytes.end(), chunk, chunk + n);
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
        fail(ErrorKind::Io, "unreadable image " + path.string() + ": not a PNG");
    }
    MemoryReader reader{&bytes};
    return decode_with([&](png_structp p) { png_set_read_fn(p, &reader, read_from_memory); }, path.string());
}

std::vector<std::uint8_t> encode(const Tensor& img, Format format) { return encode_impl(img, format); }

void write(const std::filesystem::path& path, const Tensor& img, Format format) {
    const auto bytes = encode_impl(img, format);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!file || std::fwrite(bytes.data(), 1, bytes.size(), file.get()) != bytes.size()) {
        fail(ErrorKind::Io, "cannot write " + path.string());
    }
}

}  // namespace smartbrush::png
