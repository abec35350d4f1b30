#include "flowbench/numcore/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace flowbench::numcore {

namespace {

constexpr char kParamMagic[] = "FBTENS01";
constexpr std::uint32_t kParamVersion = 1;

void write_raw(std::ostream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!out) throw IoError("write failed");
}

void read_raw(std::istream& in, void* p, std::size_t n) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in) throw IoError("read failed (truncated file?)");
}

}  // namespace

void write_u8(std::ostream& out, std::uint8_t v) { write_raw(out, &v, 1); }

void write_u32(std::ostream& out, std::uint32_t v) {
    std::uint8_t buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<std::uint8_t>(v >> (8 * i));
    write_raw(out, buf, 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    std::uint8_t buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<std::uint8_t>(v >> (8 * i));
    write_raw(out, buf, 8);
}

void write_f32(std::ostream& out, float v) { write_u32(out, std::bit_cast<std::uint32_t>(v)); }
void write_f64(std::ostream& out, double v) { write_u64(out, std::bit_cast<std::uint64_t>(v)); }

void write_bytes(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    if (!s.empty()) write_raw(out, s.data(), s.size());
}

std::uint8_t read_u8(std::istream& in) {
    std::uint8_t v;
    read_raw(in, &v, 1);
    return v;
}

std::uint32_t read_u32(std::istream& in) {
    std::uint8_t buf[4];
    read_raw(in, buf, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

std::uint64_t read_u64(std::istream& in) {
    std::uint8_t buf[8];
    read_raw(in, buf, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

float read_f32(std::istream& in) { return std::bit_cast<float>(read_u32(in)); }
double read_f64(std::istream& in) { return std::bit_cast<double>(read_u64(in)); }

std::string read_bytes(std::istream& in) {
    const std::uint32_t n = read_u32(in);
    std::string s(n, '\0');
    if (n > 0) read_raw(in, s.data(), n);
    return s;
}

void write_tensors(std::ostream& out, const std::vector<const Tensor*>& tensors) {
    write_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const Tensor* t : tensors) {
        write_u32(out, static_cast<std::uint32_t>(t->ndim()));
        for (std::size_t d : t->shape()) write_u64(out, d);
        for (std::size_t i = 0; i < t->size(); ++i) write_f64(out, (*t)[i]);
    }
}

void write_tensors(std::ostream& out, const std::vector<Tensor>& tensors) {
    std::vector<const Tensor*> ptrs;
    ptrs.reserve(tensors.size());
    for (const Tensor& t : tensors) ptrs.push_back(&t);
    write_tensors(out, ptrs);
}

std::vector<Tensor> read_tensors(std::istream& in) {
    const std::uint32_t count = read_u32(in);
    std::vector<Tensor> out;
    out.reserve(count);
    for (std::uint32_t k = 0; k < count; ++k) {
        const std::uint32_t ndim = read_u32(in);
        std::vector<std::size_t> shape(ndim);
        for (auto& d : shape) d = static_cast<std::size_t>(read_u64(in));
        Tensor t(shape);
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = read_f64(in);
        out.push_back(std::move(t));
    }
    return out;
}

void expect_magic(std::istream& in, const char* magic, const char* what) {
    const std::size_t n = std::strlen(magic);
    std::string got(n, '\0');
    read_raw(in, got.data(), n);
    if (got != magic) throw IoError(std::string(what) + ": bad magic");
}

void check_version(std::uint32_t got, std::uint32_t want, const char* what) {
    if (got != want) {
        throw IoError(std::string(what) + ": unsupported format version " + std::to_string(got));
    }
}

void save_param_file(const std::filesystem::path& path,
                     const std::vector<const Tensor*>& tensors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(kParamMagic, 8);
    write_u32(out, kParamVersion);
    write_tensors(out, tensors);
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<Tensor> load_param_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    expect_magic(in, kParamMagic, "param file");
    check_version(read_u32(in), kParamVersion, "param file");
    return read_tensors(in);
}

}  // namespace flowbench::numcore
