#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "edei/error.hpp"
#include "edei/model.hpp"

namespace edei {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[8] = {'E', 'D', 'E', 'I', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

enum class DType : std::uint8_t { Float32 = 0, Float64 = 1 };

class Writer {
public:
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        bytes.insert(bytes.end(), b, b + n);
    }
    template <typename T>
    void le(T v) {
        for (std::size_t i = 0; i < sizeof(T); ++i) bytes.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i)));
    }
    void str(const std::string& s) {
        le<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }
    std::vector<std::uint8_t> bytes;
};

class Reader {
public:
    explicit Reader(std::vector<std::uint8_t> b) : bytes(std::move(b)) {}

    const std::uint8_t* take(std::size_t n, const std::string& field) {
        if (bytes.size() - pos < n) throw CheckpointError("checkpoint truncated while reading field '" + field + "'");
        const auto* p = bytes.data() + pos;
        pos += n;
        return p;
    }
    template <typename T>
    T le(const std::string& field) {
        const auto* p = take(sizeof(T), field);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        return static_cast<T>(v);
    }
    std::string str(const std::string& field) {
        const auto n = le<std::uint32_t>(field);
        const auto* p = take(n, field);
        return {reinterpret_cast<const char*>(p), n};
    }
    bool done() const { return pos == bytes.size(); }

    std::vector<std::uint8_t> bytes;
    std::size_t pos = 0;
};

} // namespace

void save_checkpoint(const std::string& path, DualPathNet& net) {
    KvConfig cfg = net->config().to_config();
    cfg.set("trained_stage", net->trained_stage);

    Writer w;
    w.raw(kMagic, sizeof(kMagic));
    w.le<std::uint32_t>(kVersion);
    w.str(cfg.to_string());
    const auto params = net->named_parameters();
    w.le<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
    for (const auto& item : params) {
        auto t = item.value().detach().contiguous().cpu();
        DType dt;
        if (t.scalar_type() == torch::kFloat32) {
            dt = DType::Float32;
        } else if (t.scalar_type() == torch::kFloat64) {
            dt = DType::Float64;
        } else {
            throw CheckpointError("parameter '" + item.key() + "' has an unsupported dtype");
        }
        w.str(item.key());
        w.le<std::uint8_t>(static_cast<std::uint8_t>(dt));
        w.le<std::uint8_t>(static_cast<std::uint8_t>(t.dim()));
        for (int64_t d : t.sizes()) w.le<std::int64_t>(d);
        w.raw(t.data_ptr(), t.numel() * t.element_size());
    }

    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw CheckpointError("cannot write checkpoint " + tmp.string());
        out.write(reinterpret_cast<const char*>(w.bytes.data()), static_cast<std::streamsize>(w.bytes.size()));
        if (!out) throw CheckpointError("cannot write checkpoint " + tmp.string());
    }
    fs::rename(tmp, target);
}

DualPathNet load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint " + path);
    Reader r({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()});

    if (std::memcmp(r.take(sizeof(kMagic), "magic"), kMagic, sizeof(kMagic)) != 0) {
        throw CheckpointError("checkpoint field 'magic' is not EDEICKPT in " + path);
    }
    const auto version = r.le<std::uint32_t>("version");
    if (version != kVersion) {
        throw CheckpointError("checkpoint field 'version' is " + std::to_string(version) + ", expected " +
                              std::to_string(kVersion));
    }
    KvConfig cfg;
    ModelConfig model_cfg;
    try {
        cfg = KvConfig::parse(r.str("config"));
        model_cfg = ModelConfig::from_config(cfg);
    } catch (const ConfigError& e) {
        throw CheckpointError(std::string("checkpoint field 'config': ") + e.what());
    }

    DualPathNet net(model_cfg);
    net->trained_stage = static_cast<int>(cfg.get_int("trained_stage", 0));
    auto params = net->named_parameters();
    const auto count = r.le<std::uint32_t>("parameter count");
    if (count != params.size()) {
        throw CheckpointError("checkpoint field 'parameter count' is " + std::to_string(count) + ", model has " +
                              std::to_string(params.size()));
    }
    torch::NoGradGuard no_grad;
    bool converted = false;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::string name = r.str("parameter name");
        auto* slot = params.find(name);
        if (!slot) throw CheckpointError("checkpoint parameter '" + name + "' is not part of the model");
        const auto dt = r.le<std::uint8_t>(name + ".dtype");
        if (dt > 1) throw CheckpointError("checkpoint parameter '" + name + "' has unknown dtype");
        const auto ndim = r.le<std::uint8_t>(name + ".dims");
        std::vector<int64_t> dims;
        for (int d = 0; d < ndim; ++d) dims.push_back(r.le<std::int64_t>(name + ".dims"));
        if (!slot->sizes().equals(dims)) throw CheckpointError("checkpoint parameter '" + name + "' has the wrong shape");
        const auto type = dt == 0 ? torch::kFloat32 : torch::kFloat64;
        if (type == torch::kFloat64 && !converted) {
            net->to(torch::kFloat64);
            params = net->named_parameters();
            slot = params.find(name);
            converted = true;
        }
        const std::size_t nbytes = static_cast<std::size_t>(slot->numel()) * (dt == 0 ? 4 : 8);
        const auto* data = r.take(nbytes, name + ".data");
        auto src = torch::from_blob(const_cast<std::uint8_t*>(data), dims, torch::TensorOptions().dtype(type));
        slot->copy_(src);
    }
    if (!r.done()) throw CheckpointError("checkpoint has trailing bytes after the parameters");
    return net;
}

} // namespace edei
