#include <doctest.h>

#include <fstream>

#include "helpers.hpp"
#include "kineme/common.hpp"
#include "kineme/container.hpp"

using namespace kineme;

TEST_SUITE_BEGIN("container");

namespace {
Container sample_container() {
    Container c;
    c.kind = kKindCodebook;
    c.meta["tag"] = "sample";
    c.meta["count"] = 3;
    Eigen::MatrixXd m(2, 3);
    m << 1.5, -2.25, 3.0, 0.0, 1e-12, 7.5;
    c.matrices["m"] = m;
    c.matrices["v"] = Eigen::MatrixXd::Constant(4, 1, 0.125);
    return c;
}
}  // namespace

TEST_CASE("round trip is lossless") {
    TempDir dir("container");
    const auto path = dir.file("a.knc");
    const Container c = sample_container();
    write_container(path, c);
    const Container back = read_container(path, kKindCodebook);
    CHECK(back.meta.at("tag") == "sample");
    CHECK(back.meta.at("count") == 3);
    CHECK(back.matrices.at("m") == c.matrices.at("m"));
    CHECK(back.matrices.at("v") == c.matrices.at("v"));
}

TEST_CASE("repeated writes are byte-identical") {
    TempDir dir("container");
    write_container(dir.file("a"), sample_container());
    write_container(dir.file("b"), sample_container());
    CHECK(read_bytes(dir.file("a")) == read_bytes(dir.file("b")));
}

TEST_CASE("truncation is caught by the checksum") {
    TempDir dir("container");
    const auto path = dir.file("a.knc");
    write_container(path, sample_container());
    std::string bytes = read_bytes(path);
    write_text(dir.file("trunc.knc"), bytes.substr(0, bytes.size() - 9));
    CHECK_THROWS_AS(read_container(dir.file("trunc.knc"), kKindCodebook), DataError);
}

TEST_CASE("a flipped payload byte is caught by the checksum") {
    TempDir dir("container");
    const auto path = dir.file("a.knc");
    write_container(path, sample_container());
    std::string bytes = read_bytes(path);
    bytes[bytes.size() / 2] ^= 0x40;
    write_text(dir.file("corrupt.knc"), bytes);
    CHECK(throws_with_substr<DataError>([&] { (void)(read_container(dir.file("corrupt.knc"), kKindCodebook)); }, "checksum"));
}

TEST_CASE("an unsupported version is reported explicitly") {
    TempDir dir("container");
    const auto path = dir.file("a.knc");
    write_container(path, sample_container());
    std::string bytes = read_bytes(path);
    bytes[8] = 9;  // version field follows the 8-byte magic
    write_text(dir.file("old.knc"), bytes);
    CHECK(throws_with_substr<DataError>([&] { (void)(read_container(dir.file("old.knc"), kKindCodebook)); }, "version"));
}

TEST_CASE("wrong magic and wrong kind are rejected") {
    TempDir dir("container");
    write_text(dir.file("junk.knc"), "definitely not a container, padded to some length......");
    CHECK_THROWS_AS(read_container(dir.file("junk.knc"), kKindCodebook), DataError);

    const auto path = dir.file("a.knc");
    write_container(path, sample_container());
    CHECK_THROWS_AS(read_container(path, kKindModel), DataError);
}

TEST_SUITE_END();
