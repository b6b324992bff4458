#include "gmvae/data_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <numeric>
#include <utility>

#include "json.hpp"

namespace gmvae::data {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;

std::uint32_t read_be32(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

}  // namespace

IdxImageSet parse_idx(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 16) throw format_error("parse_idx: truncated header");
    const std::uint32_t magic = read_be32(bytes.data());
    if (magic != kImageMagic) {
        throw format_error("parse_idx: wrong magic (expected unsigned-byte 3-D image set)");
    }
    IdxImageSet set;
    set.count = static_cast<int>(read_be32(bytes.data() + 4));
    set.rows = static_cast<int>(read_be32(bytes.data() + 8));
    set.cols = static_cast<int>(read_be32(bytes.data() + 12));
    if (set.count < 0 || set.rows <= 0 || set.cols <= 0) {
        throw format_error("parse_idx: nonsensical dimensions");
    }
    const std::size_t expected =
        static_cast<std::size_t>(set.count) * set.rows * set.cols;
    if (bytes.size() != 16 + expected) {
        throw format_error("parse_idx: pixel buffer length mismatch (truncated or padded)");
    }
    set.pixels.assign(bytes.begin() + 16, bytes.end());
    return set;
}

std::vector<std::uint8_t> serialize_idx(const IdxImageSet& set) {
    std::vector<std::uint8_t> out;
    out.reserve(16 + set.pixels.size());
    write_be32(out, kImageMagic);
    write_be32(out, static_cast<std::uint32_t>(set.count));
    write_be32(out, static_cast<std::uint32_t>(set.rows));
    write_be32(out, static_cast<std::uint32_t>(set.cols));
    out.insert(out.end(), set.pixels.begin(), set.pixels.end());
    return out;
}

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& bytes) {
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 16) != Z_OK) {
        throw format_error("gunzip: inflateInit2 failed");
    }
    std::vector<std::uint8_t> out;
    std::array<std::uint8_t, 1 << 16> buf;
    zs.next_in = const_cast<Bytef*>(bytes.data());
    zs.avail_in = static_cast<uInt>(bytes.size());
    int ret = Z_OK;
    do {
        zs.next_out = buf.data();
        zs.avail_out = static_cast<uInt>(buf.size());
        ret = inflate(&zs, Z_NO_FLUSH);
        if (ret != Z_OK && ret != Z_STREAM_END) {
            inflateEnd(&zs);
            throw format_error("gunzip: corrupt gzip stream");
        }
        out.insert(out.end(), buf.data(), buf.data() + (buf.size() - zs.avail_out));
    } while (ret != Z_STREAM_END);
    inflateEnd(&zs);
    return out;
}

IdxImageSet load_idx_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("load_idx_file: cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) {
        bytes = gunzip(bytes);
    }
    return parse_idx(bytes);
}

BinarizedDataset binarize(const IdxImageSet& images, double threshold) {
    if (!(threshold > 0.0) || !(threshold < 1.0)) {
        throw domain_error("binarize: threshold must lie in (0, 1)");
    }
    BinarizedDataset ds;
    ds.count = images.count;
    ds.dim = images.rows * images.cols;
    ds.threshold = threshold;
    ds.bits.resize(images.pixels.size());
    for (std::size_t i = 0; i < images.pixels.size(); ++i) {
        ds.bits[i] = (images.pixels[i] / 255.0 > threshold) ? 1 : 0;
    }
    return ds;
}

std::vector<std::vector<int>> make_batches(int count, int n, int batch_size, Rng& rng) {
    if (n > count) throw domain_error("make_batches: n exceeds dataset size");
    if (n < 1 || batch_size < 1) throw domain_error("make_batches: n and batch_size must be >= 1");
    std::vector<int> order(static_cast<std::size_t>(count));
    std::iota(order.begin(), order.end(), 0);
    // Fisher-Yates with our own stream (std::shuffle is implementation-defined).
    for (int i = count - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.uniform() * (i + 1));
        std::swap(order[i], order[std::min(j, i)]);
    }
    std::vector<std::vector<int>> batches;
    for (int start = 0; start < n; start += batch_size) {
        const int end = std::min(n, start + batch_size);
        batches.emplace_back(order.begin() + start, order.begin() + end);
    }
    return batches;
}

ad::Tensor gather(const BinarizedDataset& ds, const std::vector<int>& indices) {
    ad::Tensor out(static_cast<int>(indices.size()), ds.dim);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const int idx = indices[r];
        if (idx < 0 || idx >= ds.count) throw domain_error("gather: index out of range");
        const std::uint8_t* src = ds.bits.data() + static_cast<std::size_t>(idx) * ds.dim;
        for (int j = 0; j < ds.dim; ++j) out(static_cast<int>(r), j) = src[j];
    }
    return out;
}

namespace {

// 5x7 glyphs, row-major, '#' = stroke.
const std::array<std::array<const char*, 7>, 10> kGlyphs = {{
    {" ### ", "#   #", "#  ##", "# # #", "##  #", "#   #", " ### "},  // 0
    {"  #  ", " ##  ", "  #  ", "  #  ", "  #  ", "  #  ", " ### "},  // 1
    {" ### ", "#   #", "    #", "   # ", "  #  ", " #   ", "#####"},  // 2
    {" ### ", "#   #", "    #", "  ## ", "    #", "#   #", " ### "},  // 3
    {"   # ", "  ## ", " # # ", "#  # ", "#####", "   # ", "   # "},  // 4
    {"#####", "#    ", "#### ", "    #", "    #", "#   #", " ### "},  // 5
    {" ### ", "#    ", "#    ", "#### ", "#   #", "#   #", " ### "},  // 6
    {"#####", "    #", "   # ", "  #  ", "  #  ", " #   ", " #   "},  // 7
    {" ### ", "#   #", "#   #", " ### ", "#   #", "#   #", " ### "},  // 8
    {" ### ", "#   #", "#   #", " ####", "    #", "    #", " ### "},  // 9
}};

}  // namespace

IdxImageSet synth_digits(int count, std::uint64_t seed) {
    if (count < 0) throw domain_error("synth_digits: count must be >= 0");
    constexpr int kSide = 28;
    constexpr int kScale = 3;  // glyphs render as 15 x 21
    IdxImageSet set;
    set.count = count;
    set.rows = kSide;
    set.cols = kSide;
    set.pixels.assign(static_cast<std::size_t>(count) * kSide * kSide, 0);
    Rng rng(seed);
    for (int img = 0; img < count; ++img) {
        std::uint8_t* px = set.pixels.data() + static_cast<std::size_t>(img) * kSide * kSide;
        const int digit = static_cast<int>(rng.uniform() * 10.0) % 10;
        const int ox = 4 + static_cast<int>(rng.uniform() * 7.0);  // glyph is 15 wide
        const int oy = 2 + static_cast<int>(rng.uniform() * 5.0);  // glyph is 21 tall
        for (int gy = 0; gy < 7; ++gy) {
            for (int gx = 0; gx < 5; ++gx) {
                if (kGlyphs[digit][gy][gx] != '#') continue;
                for (int sy = 0; sy < kScale; ++sy) {
                    for (int sx = 0; sx < kScale; ++sx) {
                        if (rng.uniform() < 0.02) continue;  // stroke dropout
                        const int x = ox + gx * kScale + sx;
                        const int y = oy + gy * kScale + sy;
                        px[y * kSide + x] =
                            static_cast<std::uint8_t>(160 + rng.uniform() * 95.0);
                    }
                }
            }
        }
        for (int i = 0; i < kSide * kSide; ++i) {
            if (px[i] == 0 && rng.uniform() < 0.005) px[i] = 200;  // speckle
        }
    }
    return set;
}

void save_checkpoint(const std::string& path, const std::string& meta_json,
                     const std::vector<CheckpointBlock>& blocks) {
    nlohmann::json header;
    try {
        header["meta"] = nlohmann::json::parse(meta_json);
    } catch (const nlohmann::json::exception&) {
        throw format_error("save_checkpoint: meta_json is not valid JSON");
    }
    header["blocks"] = nlohmann::json::array();
    for (const auto& b : blocks) {
        header["blocks"].push_back(
            {{"name", b.name}, {"rows", b.tensor.rows()}, {"cols", b.tensor.cols()}});
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw format_error("save_checkpoint: cannot open " + path);
    out.write("GMVAE01\n", 8);
    const std::string h = header.dump();
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    out.put('\0');
    static_assert(sizeof(double) == 8);
    for (const auto& b : blocks) {
        // Little-endian host assumed (checked at startup on the formats we target).
        out.write(reinterpret_cast<const char*>(b.tensor.data()),
                  static_cast<std::streamsize>(sizeof(double) * b.tensor.size()));
    }
    if (!out) throw format_error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("load_checkpoint: cannot open " + path);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    if (bytes.size() < 9 || std::memcmp(bytes.data(), "GMVAE01\n", 8) != 0) {
        throw format_error("load_checkpoint: bad magic");
    }
    const auto nul = std::find(bytes.begin() + 8, bytes.end(), '\0');
    if (nul == bytes.end()) throw format_error("load_checkpoint: unterminated header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(std::string(bytes.begin() + 8, nul));
    } catch (const nlohmann::json::exception&) {
        throw format_error("load_checkpoint: corrupted JSON header");
    }
    if (!header.contains("meta") || !header.contains("blocks") || !header["blocks"].is_array()) {
        throw format_error("load_checkpoint: header missing meta/blocks");
    }
    Checkpoint ck;
    ck.meta_json = header["meta"].dump();
    std::size_t offset = static_cast<std::size_t>(nul - bytes.begin()) + 1;
    for (const auto& b : header["blocks"]) {
        if (!b.contains("name") || !b.contains("rows") || !b.contains("cols")) {
            throw format_error("load_checkpoint: malformed block entry");
        }
        const int rows = b["rows"].get<int>();
        const int cols = b["cols"].get<int>();
        if (rows < 0 || cols < 0) throw format_error("load_checkpoint: negative block shape");
        CheckpointBlock blk{b["name"].get<std::string>(), ad::Tensor(rows, cols)};
        const std::size_t nbytes = sizeof(double) * static_cast<std::size_t>(blk.tensor.size());
        if (offset + nbytes > bytes.size()) {
            throw format_error("load_checkpoint: truncated parameter block " + blk.name);
        }
        std::memcpy(blk.tensor.data(), bytes.data() + offset, nbytes);
        offset += nbytes;
        ck.blocks.push_back(std::move(blk));
    }
    if (offset != bytes.size()) throw format_error("load_checkpoint: trailing bytes");
    return ck;
}

}  // namespace gmvae::data
