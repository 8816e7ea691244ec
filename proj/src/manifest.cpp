#include "adoptkit/manifest.hpp"

#include "adoptkit/csv.hpp"
#include "adoptkit/dataset.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <memory>

namespace adoptkit {

namespace {

std::string digest_hex(const unsigned char* md, unsigned len) {
    static const char* hex = "0123456789abcdef";
    std::string out(len * 2, '0');
    for (unsigned i = 0; i < len; ++i) {
        out[2 * i] = hex[md[i] >> 4];
        out[2 * i + 1] = hex[md[i] & 0xf];
    }
    return out;
}

using EvpCtx = std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)>;

} // namespace

std::string sha256_hex(std::string_view bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    if (!EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr))
        throw std::runtime_error("sha256 failed");
    return digest_hex(md, len);
}

std::string sha256_file(const std::string& path) {
    std::unique_ptr<std::FILE, decltype(&std::fclose)> f(std::fopen(path.c_str(), "rb"),
                                                         &std::fclose);
    if (!f) throw std::runtime_error("cannot open for hashing: " + path);
    EvpCtx ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || !EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr))
        throw std::runtime_error("sha256 init failed");
    char buf[1 << 16];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, f.get())) > 0)
        if (!EVP_DigestUpdate(ctx.get(), buf, n)) throw std::runtime_error("sha256 failed");
    if (std::ferror(f.get())) throw std::runtime_error("read failed while hashing: " + path);
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    if (!EVP_DigestFinal_ex(ctx.get(), md, &len)) throw std::runtime_error("sha256 failed");
    return digest_hex(md, len);
}

nlohmann::json Manifest::to_json() const {
    nlohmann::json j;
    j["stage"] = stage;
    j["version"] = version;
    j["parameters"] = parameters;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    return j;
}

Manifest Manifest::from_json(const nlohmann::json& j) {
    Manifest m;
    try {
        m.stage = j.at("stage").get<std::string>();
        m.version = j.at("version").get<int>();
        m.parameters = j.at("parameters");
        m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
        m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed manifest: ") + e.what());
    }
    if (m.version != 1)
        throw ValidationError("unsupported manifest version " + std::to_string(m.version));
    return m;
}

Manifest write_stage_manifest(const std::string& dir, const std::string& stage,
                              const nlohmann::json& parameters,
                              const std::map<std::string, std::string>& inputs,
                              const std::vector<std::string>& output_files) {
    Manifest m;
    m.stage = stage;
    m.parameters = parameters;
    m.inputs = inputs;
    for (const auto& f : output_files) m.outputs[f] = sha256_file(dir + "/" + f);
    write_file(dir + "/manifest.json", m.to_json().dump(2) + "\n");
    return m;
}

Manifest read_stage_manifest(const std::string& dir, const std::string& stage) {
    const std::string path = dir + "/manifest.json";
    if (!std::filesystem::exists(path))
        throw MissingDependency("missing manifest: " + path + " (run the " + stage +
                                " stage first)");
    Manifest m = Manifest::from_json(nlohmann::json::parse(read_file(path)));
    if (m.stage != stage)
        throw MissingDependency("manifest " + path + " belongs to stage '" + m.stage +
                                "', expected '" + stage + "'");
    return m;
}

void verify_stage_outputs(const std::string& dir, const Manifest& m) {
    for (const auto& [file, recorded] : m.outputs) {
        const std::string path = dir + "/" + file;
        if (!std::filesystem::exists(path))
            throw StaleInput("declared output missing: " + path);
        const std::string actual = sha256_file(path);
        if (actual != recorded)
            throw StaleInput("stale input: " + path + " hash " + actual +
                             " does not match manifest " + recorded);
    }
}

} // namespace adoptkit
