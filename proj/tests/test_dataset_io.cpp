#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "pcp/dataset_io.hpp"
#include "pcp/ecg.hpp"

using namespace pcp;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("pcp_io_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<char> slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return std::vector<char>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void spit(const std::string& p, const std::vector<char>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

EcgDataset small_cohort() {
    CohortConfig cfg;
    cfg.num_patients = 8;
    cfg.frames_per_patient = 3;
    cfg.num_classes = 4;
    cfg.seed = 7;
    return generate_synthetic_cohort(cfg);
}

}  // namespace

TEST_CASE("dataset round-trip is exact and byte-stable") {
    TempDir tmp;
    EcgDataset ds = small_cohort();
    const std::string p1 = tmp.file("a.pcpd");
    save_dataset(ds, p1);
    EcgDataset loaded = load_dataset(p1);
    CHECK(loaded == ds);

    const std::string p2 = tmp.file("b.pcpd");
    save_dataset(loaded, p2);
    CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("truncated dataset files raise a parse error with no partial result") {
    TempDir tmp;
    EcgDataset ds = small_cohort();
    const std::string p = tmp.file("full.pcpd");
    save_dataset(ds, p);
    auto bytes = slurp(p);

    for (std::size_t cut : {bytes.size() - 1, bytes.size() / 2, std::size_t{7}, std::size_t{2}}) {
        std::vector<char> trunc(bytes.begin(), bytes.begin() + static_cast<long>(cut));
        const std::string tp = tmp.file("trunc.pcpd");
        spit(tp, trunc);
        CHECK_THROWS_AS(load_dataset(tp), ParseError);
    }
}

TEST_CASE("bad magic and trailing garbage are parse errors") {
    TempDir tmp;
    EcgDataset ds = small_cohort();
    const std::string p = tmp.file("x.pcpd");
    save_dataset(ds, p);
    auto bytes = slurp(p);

    auto bad = bytes;
    bad[0] = 'X';
    spit(tmp.file("badmagic.pcpd"), bad);
    CHECK_THROWS_AS(load_dataset(tmp.file("badmagic.pcpd")), ParseError);

    auto tail = bytes;
    tail.push_back(0);
    spit(tmp.file("tail.pcpd"), tail);
    CHECK_THROWS_AS(load_dataset(tmp.file("tail.pcpd")), ParseError);
}

TEST_CASE("a frame length other than 2500 is a validation error naming the field") {
    TempDir tmp;
    EcgDataset ds = small_cohort();
    const std::string p = tmp.file("y.pcpd");
    save_dataset(ds, p);
    auto bytes = slurp(p);
    // frame_len lives at offset 4 (magic) + 2 (version) + 4 (num_frames) + 2 (C) = 12
    bytes[12] = 0x10;
    bytes[13] = 0x00;
    spit(tmp.file("len.pcpd"), bytes);
    CHECK_THROWS_WITH(load_dataset(tmp.file("len.pcpd")),
                      Catch::Matchers::ContainsSubstring("frame_len"));
}

TEST_CASE("out-of-range label names the offending record") {
    TempDir tmp;
    EcgDataset ds = small_cohort();
    ds.frames[2].label = 99;  // >= num_classes
    const std::string p = tmp.file("z.pcpd");
    save_dataset(ds, p);
    CHECK_THROWS_WITH(load_dataset(p), Catch::Matchers::ContainsSubstring("record 2"));
}

TEST_CASE("csv export writes one row per frame with a header and trailing newline") {
    TempDir tmp;
    CohortConfig cfg;
    cfg.num_patients = 3;
    cfg.frames_per_patient = 2;
    cfg.num_classes = 3;
    cfg.seed = 1;
    EcgDataset ds = generate_synthetic_cohort(cfg);
    const std::string p = tmp.file("d.csv");
    export_dataset_csv(ds, p);

    std::ifstream in(p);
    std::string line;
    std::size_t lines = 0;
    std::string first;
    while (std::getline(in, line)) {
        if (lines == 0) first = line;
        ++lines;
    }
    CHECK(lines == 1 + ds.frames.size());
    CHECK(first.rfind("patient_id,lead_id,label,s0,", 0) == 0);

    auto bytes = slurp(p);
    REQUIRE(!bytes.empty());
    CHECK(bytes.back() == '\n');
}
