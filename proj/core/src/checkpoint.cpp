#include "dpw/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace dpw {

namespace {

constexpr int kVersion = 1;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_vector(std::ostream& out, const char* tag, const std::vector<double>& v) {
    out << tag;
    for (double x : v) out << ' ' << fmt(x);
    out << '\n';
}

} // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint '" + path + "'");
    const auto& cfg = ckpt.model.config;
    out << "dpw-checkpoint " << kVersion << '\n';
    out << "config lookback " << cfg.lookback << '\n';
    out << "config horizon " << cfg.horizon << '\n';
    out << "config channels " << cfg.channels << '\n';
    out << "config n_scales " << cfg.n_scales << '\n';
    out << "config patch_len " << cfg.patch_len << '\n';
    out << "config hidden_dim " << cfg.hidden_dim << '\n';
    out << "config mixer_layers " << cfg.mixer_layers << '\n';
    out << "config use_wavelet " << (cfg.use_wavelet ? 1 : 0) << '\n';
    out << "config use_global_path " << (cfg.use_global_path ? 1 : 0) << '\n';
    out << "config use_local_path " << (cfg.use_local_path ? 1 : 0) << '\n';
    out << "config use_adaptive_fusion " << (cfg.use_adaptive_fusion ? 1 : 0) << '\n';
    out << "config revin_eps " << fmt(cfg.revin_eps) << '\n';
    out << "config ln_eps " << fmt(cfg.ln_eps) << '\n';
    write_vector(out, "scaler_mean", ckpt.scaler.mean);
    write_vector(out, "scaler_std", ckpt.scaler.stddev);
    for (const auto& [name, tensor] : ckpt.model.named_tensors()) {
        out << "param " << name << ' ' << tensor.rank();
        for (int d : tensor.shape()) out << ' ' << d;
        for (double v : tensor.data()) out << ' ' << fmt(v);
        out << '\n';
    }
    out << "end\n";
    if (!out) throw DataError("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw DataError("checkpoint '" + path + "' is empty");
    {
        std::istringstream head(line);
        std::string magic;
        int version = -1;
        head >> magic >> version;
        if (magic != "dpw-checkpoint") {
            throw DataError("'" + path + "' is not a dpw checkpoint");
        }
        if (version < 1 || version > kVersion) {
            throw DataError("checkpoint '" + path + "' has unsupported version " +
                            std::to_string(version));
        }
    }

    ModelConfig cfg;
    DatasetScaler scaler;
    std::map<std::string, std::vector<double>> params;
    bool ended = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string kind;
        ls >> kind;
        if (kind == "end") {
            ended = true;
            break;
        } else if (kind == "config") {
            std::string key;
            ls >> key;
            if (key == "lookback") ls >> cfg.lookback;
            else if (key == "horizon") ls >> cfg.horizon;
            else if (key == "channels") ls >> cfg.channels;
            else if (key == "n_scales") ls >> cfg.n_scales;
            else if (key == "patch_len") ls >> cfg.patch_len;
            else if (key == "hidden_dim") ls >> cfg.hidden_dim;
            else if (key == "mixer_layers") ls >> cfg.mixer_layers;
            else if (key == "use_wavelet") { int v; ls >> v; cfg.use_wavelet = v != 0; }
            else if (key == "use_global_path") { int v; ls >> v; cfg.use_global_path = v != 0; }
            else if (key == "use_local_path") { int v; ls >> v; cfg.use_local_path = v != 0; }
            else if (key == "use_adaptive_fusion") {
                int v;
                ls >> v;
                cfg.use_adaptive_fusion = v != 0;
            } else if (key == "revin_eps") ls >> cfg.revin_eps;
            else if (key == "ln_eps") ls >> cfg.ln_eps;
            // unknown config keys from newer minor revisions are skipped
        } else if (kind == "scaler_mean" || kind == "scaler_std") {
            std::vector<double> v;
            double x;
            while (ls >> x) v.push_back(x);
            (kind == "scaler_mean" ? scaler.mean : scaler.stddev) = std::move(v);
        } else if (kind == "param") {
            std::string name;
            int rank = 0;
            ls >> name >> rank;
            std::int64_t n = 1;
            for (int i = 0; i < rank; ++i) {
                int d;
                if (!(ls >> d)) throw DataError("checkpoint param '" + name + "': bad shape");
                n *= d;
            }
            std::vector<double> values;
            values.reserve(static_cast<std::size_t>(n));
            double x;
            while (ls >> x) values.push_back(x);
            if (static_cast<std::int64_t>(values.size()) != n) {
                throw DataError("checkpoint param '" + name + "': expected " + std::to_string(n) +
                                " values, got " + std::to_string(values.size()));
            }
            params[name] = std::move(values);
        } else {
            throw DataError("checkpoint '" + path + "': unknown entry '" + kind + "'");
        }
    }
    if (!ended) throw DataError("checkpoint '" + path + "' is truncated (missing 'end')");

    Checkpoint ckpt;
    ckpt.model = make_model_skeleton(cfg);
    ckpt.scaler = std::move(scaler);
    if (static_cast<int>(ckpt.scaler.mean.size()) != cfg.channels ||
        static_cast<int>(ckpt.scaler.stddev.size()) != cfg.channels) {
        throw DataError("checkpoint '" + path + "': scaler does not match channel count");
    }
    for (auto& [name, tensor] : ckpt.model.named_tensors()) {
        auto it = params.find(name);
        if (it == params.end()) {
            throw DataError("checkpoint '" + path + "': missing parameter '" + name + "'");
        }
        if (static_cast<std::int64_t>(it->second.size()) != tensor.size()) {
            throw DataError("checkpoint '" + path + "': parameter '" + name + "' has " +
                            std::to_string(it->second.size()) + " values, expected " +
                            std::to_string(tensor.size()));
        }
        Tensor t = tensor;
        t.data() = it->second;
    }
    return ckpt;
}

} // namespace dpw
