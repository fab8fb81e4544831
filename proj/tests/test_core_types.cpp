#include "doctest.h"

#include <set>

#include "cvkit/types.hpp"

using namespace cvkit;

TEST_CASE("image tensor enforces shape and range")
{
    ImageTensor img(2, 3);
    CHECK(img.channels() == 3);
    CHECK(img.data().size() == 18);
    img.set(2, 1, 2, 255.0f);
    CHECK(img.at(2, 1, 2) == 255.0f);
    CHECK(img.data().back() == 255.0f);

    CHECK_THROWS_AS(ImageTensor(0, 3), std::invalid_argument);
    CHECK_THROWS_AS(ImageTensor(2, 2, std::vector<float>(11)), std::invalid_argument);
    CHECK_THROWS_AS(ImageTensor(1, 1, {0.0f, 256.0f, 0.0f}), std::invalid_argument);
    CHECK_THROWS_AS(img.set(0, 0, 0, -1.0f), std::invalid_argument);
}

TEST_CASE("bbox set requires parallel labels and scores")
{
    const std::vector<Box> boxes{{0, 0, 1, 1}, {1, 1, 2, 2}};
    CHECK_NOTHROW(BBoxSet(boxes, std::vector<int>{0, 1}, std::vector<double>{0.5, 0.25}));
    CHECK_THROWS_AS(BBoxSet(boxes, std::vector<int>{0}), std::invalid_argument);
    CHECK_THROWS_AS(BBoxSet(boxes, std::nullopt, std::vector<double>{0.1, 0.2, 0.3}), std::invalid_argument);

    const BBoxSet b(boxes, std::vector<int>{3, 4}, std::vector<double>{0.5, 0.25});
    const BBoxSet s = b.select({1});
    REQUIRE(s.size() == 1);
    CHECK(s[0] == Box{1, 1, 2, 2});
    CHECK((*s.labels())[0] == 4);
    CHECK((*s.scores())[0] == 0.25);
}

TEST_CASE("segmentation map accepts the ignore sentinel only")
{
    CHECK_NOTHROW(SegMap(1, 2, {-1, 3}));
    CHECK_THROWS_AS(SegMap(1, 2, {-2, 0}), std::invalid_argument);
    CHECK_THROWS_AS(SegMap(2, 2, {0, 0, 0}), std::invalid_argument);
}

TEST_CASE("validate_bbox_set")
{
    SUBCASE("well-formed box")
    {
        CHECK(validate_bbox_set(BBoxSet({{0, 0, 10, 10}}), {20, 20}).empty());
    }
    SUBCASE("inverted interval")
    {
        const auto v = validate_bbox_set(BBoxSet({{10, 0, 5, 10}}), {20, 20});
        REQUIRE(v.size() == 1);
        CHECK(v[0].find("y_min > y_max") != std::string::npos);
    }
    SUBCASE("x_max exceeds width")
    {
        const auto v = validate_bbox_set(BBoxSet({{0, 0, 10, 30}}), {20, 20});
        REQUIRE(v.size() == 1);
        CHECK(v[0].find("x_max exceeds width") != std::string::npos);
    }
    SUBCASE("boundary coordinates are valid")
    {
        CHECK(validate_bbox_set(BBoxSet({{0, 0, 20, 20}}), {20, 20}).empty());
    }
    SUBCASE("one message per violation")
    {
        const BBoxSet b({{-1, 0, 5, 25}, {0, 0, 1, 1}}, std::vector<int>{0, -3}, std::vector<double>{0.5, 1.5});
        CHECK(validate_bbox_set(b, {20, 20}).size() == 4);
    }
}

TEST_CASE("voc color palette")
{
    const auto p = voc_color_palette(256);
    REQUIRE(p.n_class() == 256);
    CHECK(p.colors[0] == Rgb{0, 0, 0});
    CHECK(p.colors[1] == Rgb{128, 0, 0});
    CHECK(p.colors[2] == Rgb{0, 128, 0});
    CHECK(p.colors[3] == Rgb{128, 128, 0});
    CHECK(p.colors[15] == Rgb{192, 128, 128});  // VOC "person"

    std::set<Rgb> distinct(p.colors.begin(), p.colors.end());
    CHECK(distinct.size() == 256);

    CHECK(voc_color_palette(1).n_class() == 1);
    CHECK_THROWS_AS(voc_color_palette(0), std::invalid_argument);
    CHECK_THROWS_AS(voc_color_palette(257), std::invalid_argument);
}
