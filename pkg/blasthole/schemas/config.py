from marshmallow import RAISE, Schema, ValidationError, fields, post_load, validates, validates_schema
from marshmallow.validate import Length, Range

from blasthole.models.camera import FilterConfig, LutRow, ProjectionLUT
from blasthole.models.cloud import BoxFilter, CorridorSpec
from blasthole.models.config import (
    CameraConfig,
    ConeConfig,
    GeometryConfig,
    HoleConfig,
    PipelineConfig,
    TrackingConfig,
    default_lut,
)
from blasthole.models.detection import FrstConfig, NmsConfig, RansacConfig
from blasthole.models.mission import MissionConfig, NoiseModel
from blasthole.utils import constants as c
from blasthole.utils.logger import logger
from blasthole.utils.validators import (
    validate_box,
    validate_lut_rows,
    validate_odd_kernel,
    validate_unit_vector,
)

POSITIVE = Range(min=0.0, min_inclusive=False)
NON_NEGATIVE = Range(min=0.0)
FRACTION = Range(min=0.0, max=1.0)


class StrictSchema(Schema):
    """Every config section rejects keys it does not know"""

    class Meta:
        unknown = RAISE


class GeometrySchema(StrictSchema):
    ground_normal = fields.List(
        fields.Float(), load_default=list(c.GROUND_NORMAL), validate=validate_unit_vector
    )
    mount_height = fields.Float(load_default=c.MOUNT_HEIGHT, validate=POSITIVE)

    @post_load
    def make_config(self, data, **kwargs):
        return GeometryConfig(tuple(data["ground_normal"]), data["mount_height"])


class CorridorSchema(StrictSchema):
    length = fields.Float(load_default=c.CORRIDOR_LENGTH, validate=POSITIVE)
    width = fields.Float(load_default=c.CORRIDOR_WIDTH, validate=POSITIVE)
    rear = fields.Float(load_default=c.CORRIDOR_REAR, validate=NON_NEGATIVE)
    boxes = fields.List(
        fields.List(fields.List(fields.Float()), validate=validate_box),
        load_default=[[list(low), list(high)] for low, high in c.ROBOT_BODY_BOXES],
    )

    @post_load
    def make_corridor(self, data, **kwargs):
        boxes = tuple(BoxFilter(tuple(low), tuple(high)) for low, high in data["boxes"])
        return CorridorSpec(data["length"], data["width"], data["rear"], boxes)


class ConeSchema(StrictSchema):
    corridor = fields.Nested(CorridorSchema, load_default=CorridorSpec)
    z_threshold = fields.Float(load_default=c.Z_THRESHOLD, validate=NON_NEGATIVE)
    denoise_radius = fields.Float(load_default=c.DENOISE_RADIUS, validate=POSITIVE)
    denoise_min_neighbors = fields.Integer(load_default=c.DENOISE_MIN_NEIGHBORS, validate=Range(min=0))
    cluster_cell = fields.Float(load_default=c.CLUSTER_CELL, validate=POSITIVE)
    cluster_min_points = fields.Integer(load_default=c.CLUSTER_MIN_POINTS, validate=Range(min=1))
    voxel_xy = fields.Float(load_default=c.VOXEL_XY, validate=POSITIVE)

    @post_load
    def make_config(self, data, **kwargs):
        return ConeConfig(**data)


class LutRowSchema(StrictSchema):
    distance = fields.Float(required=True, validate=NON_NEGATIVE)
    z_cam = fields.Float(required=True, validate=POSITIVE)
    fov = fields.Float(required=True, validate=Range(min=0.0, max=180.0, min_inclusive=False, max_inclusive=False))
    morph_kernel = fields.Integer(required=True, validate=validate_odd_kernel)
    blur_kernel = fields.Integer(required=True, validate=validate_odd_kernel)
    blur_sigma = fields.Float(required=True, validate=POSITIVE)
    binary_threshold = fields.Float(required=True, validate=NON_NEGATIVE)

    @post_load
    def make_row(self, data, **kwargs):
        f = FilterConfig(data["morph_kernel"], data["blur_kernel"], data["blur_sigma"], data["binary_threshold"])
        return LutRow(data["distance"], data["z_cam"], data["fov"], f)


class CameraSchema(StrictSchema):
    width = fields.Integer(load_default=c.IMAGE_WIDTH, validate=Range(min=16))
    height = fields.Integer(load_default=c.IMAGE_HEIGHT, validate=Range(min=16))
    lut = fields.List(fields.Nested(LutRowSchema), load_default=lambda: list(default_lut().rows), validate=Length(min=1))
    ground_tolerance = fields.Float(load_default=c.GROUND_TOLERANCE, validate=NON_NEGATIVE)
    surface_kernel = fields.Integer(load_default=c.SURFACE_KERNEL, validate=validate_odd_kernel)
    edge_smoothing = fields.Float(load_default=c.EDGE_SMOOTHING, validate=NON_NEGATIVE)
    ring_width = fields.Integer(load_default=c.RING_WIDTH, validate=Range(min=1))

    @validates("lut")
    def validate_lut(self, value):
        validate_lut_rows(value)

    @post_load
    def make_config(self, data, **kwargs):
        return CameraConfig(lut=ProjectionLUT(tuple(data.pop("lut"))), **data)


class FrstSchema(StrictSchema):
    alpha = fields.Float(load_default=c.FRST_ALPHA, validate=POSITIVE)
    sigma_factor = fields.Float(load_default=c.FRST_SIGMA_FACTOR, validate=POSITIVE)
    peak_threshold = fields.Float(load_default=c.FRST_PEAK_THRESHOLD, validate=FRACTION)
    roi_radius_margin = fields.Float(load_default=c.FRST_ROI_MARGIN, validate=FRACTION)
    noise_floor = fields.Float(load_default=c.FRST_NOISE_FLOOR, validate=NON_NEGATIVE)
    radius_sweep = fields.Float(load_default=c.FRST_RADIUS_SWEEP, validate=FRACTION)
    radius_steps = fields.Integer(load_default=c.FRST_RADIUS_STEPS, validate=Range(min=1))

    @post_load
    def make_config(self, data, **kwargs):
        return FrstConfig(**data)


class RansacSchema(StrictSchema):
    max_retries = fields.Integer(load_default=c.RANSAC_MAX_RETRIES, validate=Range(min=1))
    seed_size = fields.Integer(load_default=c.RANSAC_SEED_SIZE, validate=Range(min=3))
    inlier_tol = fields.Float(load_default=c.RANSAC_INLIER_TOL, validate=POSITIVE)
    min_inliers = fields.Integer(load_default=c.RANSAC_MIN_INLIERS, validate=Range(min=3))
    confidence = fields.Float(
        load_default=c.RANSAC_CONFIDENCE, validate=Range(min=0.0, max=1.0, min_inclusive=False, max_inclusive=False)
    )

    @post_load
    def make_config(self, data, **kwargs):
        return RansacConfig(**data)


class NmsSchema(StrictSchema):
    circularity_threshold = fields.Float(load_default=c.NMS_CIRCULARITY_THRESHOLD, validate=FRACTION)
    black_fraction_min = fields.Float(load_default=c.NMS_BLACK_FRACTION_MIN, validate=FRACTION)
    centrality_threshold = fields.Float(load_default=c.NMS_CENTRALITY_THRESHOLD, validate=FRACTION)
    frst_threshold = fields.Float(load_default=c.NMS_FRST_THRESHOLD, validate=FRACTION)
    alpha_1 = fields.Float(load_default=c.NMS_ALPHA_1, validate=NON_NEGATIVE)
    alpha_2 = fields.Float(load_default=c.NMS_ALPHA_2, validate=NON_NEGATIVE)
    bins = fields.Integer(load_default=c.NMS_BINS, validate=Range(min=4))
    sigma = fields.Float(load_default=c.NMS_SIGMA, validate=POSITIVE)

    @post_load
    def make_config(self, data, **kwargs):
        return NmsConfig(**data)


class TrackingSchema(StrictSchema):
    fine_stage_distance = fields.Float(load_default=c.FINE_STAGE_DISTANCE, validate=NON_NEGATIVE)
    lidar_switch_distance = fields.Float(load_default=c.LIDAR_SWITCH_DISTANCE, validate=NON_NEGATIVE)
    lidar_hysteresis = fields.Float(load_default=c.LIDAR_HYSTERESIS, validate=NON_NEGATIVE)
    track_lost_frames = fields.Integer(load_default=c.TRACK_LOST_FRAMES, validate=Range(min=0))
    coarse_min_area_factor = fields.Float(load_default=c.COARSE_MIN_AREA_FACTOR, validate=NON_NEGATIVE)
    coarse_centrality = fields.Float(load_default=c.COARSE_CENTRALITY, validate=FRACTION)

    @post_load
    def make_config(self, data, **kwargs):
        return TrackingConfig(**data)


class HoleSchema(StrictSchema):
    diameter_min = fields.Float(load_default=c.HOLE_DIAMETER_MIN, validate=POSITIVE)
    diameter_max = fields.Float(load_default=c.HOLE_DIAMETER_MAX, validate=POSITIVE)

    @validates_schema
    def validate_range(self, data, **kwargs):
        if data["diameter_min"] > data["diameter_max"]:
            raise ValidationError({"diameter_min": ["Minimum diameter exceeds the maximum."]})

    @post_load
    def make_config(self, data, **kwargs):
        return HoleConfig(**data)


class NoiseSchema(StrictSchema):
    gps_sigma = fields.Float(load_default=c.GPS_SIGMA, validate=NON_NEGATIVE)
    gps_interval = fields.Float(load_default=c.GPS_JUMP_INTERVAL, validate=POSITIVE)
    odom_drift_rate = fields.Float(load_default=c.ODOM_DRIFT_RATE, validate=NON_NEGATIVE)
    seed = fields.Integer(load_default=0, validate=Range(min=0))

    @post_load
    def make_model(self, data, **kwargs):
        return NoiseModel(**data)


class MissionSchema(StrictSchema):
    search_radius = fields.Float(load_default=c.SEARCH_RADIUS, validate=POSITIVE)
    servo_distance = fields.Float(load_default=c.SERVO_DISTANCE, validate=POSITIVE)
    los_threshold = fields.Float(load_default=c.LOS_THRESHOLD, validate=Range(min=0.0, max=180.0))
    max_speed = fields.Float(load_default=c.MAX_SPEED, validate=POSITIVE)
    max_yaw_rate = fields.Float(load_default=c.MAX_YAW_RATE, validate=POSITIVE)
    dt = fields.Float(load_default=c.SIM_DT, validate=POSITIVE)
    sonde_radius = fields.Float(load_default=c.SONDE_RADIUS, validate=POSITIVE)
    alignment_fraction = fields.Float(load_default=c.ALIGNMENT_FRACTION, validate=FRACTION)
    hole_step_budget = fields.Integer(load_default=c.HOLE_STEP_BUDGET, validate=Range(min=1))
    noise = fields.Nested(NoiseSchema, load_default=NoiseModel)

    @post_load
    def make_config(self, data, **kwargs):
        return MissionConfig(**data)


class PipelineConfigSchema(StrictSchema):
    """Layered pipeline configuration document"""

    geometry = fields.Nested(GeometrySchema, load_default=GeometryConfig)
    cone = fields.Nested(ConeSchema, load_default=ConeConfig)
    camera = fields.Nested(CameraSchema, load_default=CameraConfig)
    frst = fields.Nested(FrstSchema, load_default=FrstConfig)
    ransac = fields.Nested(RansacSchema, load_default=RansacConfig)
    nms = fields.Nested(NmsSchema, load_default=NmsConfig)
    tracking = fields.Nested(TrackingSchema, load_default=TrackingConfig)
    hole = fields.Nested(HoleSchema, load_default=HoleConfig)
    mission = fields.Nested(MissionSchema, load_default=MissionConfig)
    seed = fields.Integer(load_default=0, validate=Range(min=0))

    @post_load
    def make_config(self, data, **kwargs):
        seed = data.pop("seed")
        logger.debug(f"Pipeline config loaded with seed {seed}")
        return PipelineConfig(**data).with_seed(seed)


# Initialize schemas
pipeline_config_schema = PipelineConfigSchema()
