import enum


class Frame(enum.Enum):
    """Coordinate frames a point cloud or pose can be expressed in"""

    sensor = "sensor"
    body = "body"
    shadow = "shadow"
    odom = "odom"
    utm = "utm"
    camera = "camera"


class PointLabel(enum.IntEnum):
    """Ground-truth surface labels attached by the scene simulator"""

    ground = 0
    cone = 1
    hole_wall = 2
    pit = 3


class Stage(enum.Enum):
    coarse = "coarse"
    fine = "fine"


class Lidar(enum.Enum):
    sparse = "sparse"
    dense = "dense"


class Phase(enum.Enum):
    """Mission state machine phases, in cycle order"""

    seek_gps = "SeekGps"
    fine_planning = "FinePlanning"
    visual_servo = "VisualServo"
    dipping = "Dipping"
    done = "Done"


class Color(enum.Enum):
    black = "black"
    white = "white"


class Gate(enum.Enum):
    """Candidate gates, in the order they are checked"""

    radius_range = "radius-range"
    circularity = "circularity"
    black_fraction = "black-fraction"
    centrality = "centrality"
    frst = "frst"


# numerical tolerances
UNIT_NORM_TOL = 1e-9
PARALLEL_TOL = 1e-9
DEGENERATE_FIT_TOL = 1e-12


# ground normal for a flat bench
GROUND_NORMAL = (0.0, 0.0, 1.0)


# cone extraction
CORRIDOR_LENGTH = 6.0  # in meters
CORRIDOR_WIDTH = 4.6  # in meters, spans the platform so the wheel boxes apply
CORRIDOR_REAR = 1.5  # in meters
Z_THRESHOLD = 0.10  # in meters
DENOISE_RADIUS = 0.10  # in meters
DENOISE_MIN_NEIGHBORS = 3
CLUSTER_CELL = 0.15  # in meters
CLUSTER_MIN_POINTS = 50
VOXEL_XY = 0.05  # in meters

# robot body boxes in Body frame: (min xyz, max xyz), 3.8m wide, 2.4m long, 1.3m clearance
ROBOT_BODY_BOXES = (
    ((0.9, 1.6, 0.0), (1.5, 2.2, 1.3)),
    ((0.9, -2.2, 0.0), (1.5, -1.6, 1.3)),
    ((-1.5, 1.6, 0.0), (-0.9, 2.2, 1.3)),
    ((-1.5, -2.2, 0.0), (-0.9, -1.6, 1.3)),
    ((-1.2, -1.9, 1.3), (1.2, 1.9, 2.0)),
)


# virtual camera
IMAGE_WIDTH = 400  # in pixels
IMAGE_HEIGHT = 400  # in pixels
GROUND_TOLERANCE = 0.02  # depth fraction below ground still counted as material
SURFACE_KERNEL = 9  # in pixels
CAMERA_SCALE_FLOOR = 0.6

# distance / z_cam / fov / morph kernel / blur kernel / blur sigma / binary threshold
PROJECTION_LUT = (
    (0.2, 1.3, 71.0, 11, 5, 1.0, 0.05),
    (0.6, 1.6, 84.0, 13, 5, 1.0, 0.05),
    (1.6, 1.8, 96.0, 15, 7, 1.5, 0.05),
    (2.2, 2.2, 102.0, 17, 7, 1.5, 0.05),
    (3.2, 2.5, 102.0, 21, 9, 2.0, 0.05),
)


# physical hole size
HOLE_DIAMETER_MIN = 0.24  # in meters
HOLE_DIAMETER_MAX = 0.30  # in meters


# FRST
FRST_ALPHA = 2.0
FRST_RADIUS_SWEEP = 0.2
FRST_RADIUS_STEPS = 5
FRST_PEAK_THRESHOLD = 0.2
FRST_ROI_MARGIN = 0.25
FRST_NOISE_FLOOR = 0.05
FRST_SIGMA_FACTOR = 0.25
EDGE_SMOOTHING = 1.0  # in pixels


# RANSAC
RANSAC_MAX_RETRIES = 200
RANSAC_SEED_SIZE = 3
RANSAC_INLIER_TOL = 1.5  # in pixels
RANSAC_MIN_INLIERS = 20
RANSAC_CONFIDENCE = 0.999
RANSAC_CONVERGENCE = 1e-6  # in pixels


# NMS
NMS_CIRCULARITY_THRESHOLD = 0.5
NMS_BLACK_FRACTION_MIN = 0.7
NMS_CENTRALITY_THRESHOLD = 0.1
NMS_FRST_THRESHOLD = 0.05
NMS_ALPHA_1 = 0.5
NMS_ALPHA_2 = 0.5
NMS_BINS = 36
NMS_SIGMA = 0.05


# detection pipeline / tracking
FINE_STAGE_DISTANCE = 1.0  # in meters
LIDAR_SWITCH_DISTANCE = 3.0  # in meters
LIDAR_HYSTERESIS = 0.2  # in meters
TRACK_LOST_FRAMES = 5
COARSE_MIN_AREA_FACTOR = 0.5
COARSE_CENTRALITY = 0.25  # fraction of the smaller image side
RING_WIDTH = 3  # in pixels


# scene simulation
MOUNT_HEIGHT = 1.3  # in meters
NECK_DEPTH = 0.30  # in meters
SHAFT_DEPTH = 5.0  # in meters
COLLAR_CLEARANCE = 0.02  # collar diameter minus hole diameter, in meters
SURFACE_JITTER = 0.005  # in meters
RANGE_NOISE = 0.003  # in meters
SPHERE_TRACE_EPS = 1e-4  # in meters
SPHERE_TRACE_MAX_STEPS = 256


# mission simulation
SEARCH_RADIUS = 4.0  # in meters
SERVO_DISTANCE = 1.0  # in meters
LOS_THRESHOLD = 15.0  # in degrees
MAX_SPEED = 1.0  # in m/s
MAX_YAW_RATE = 0.5  # in rad/s
SIM_DT = 0.1  # in seconds
SONDE_RADIUS = 0.05  # in meters
ALIGNMENT_FRACTION = 0.3
GPS_SIGMA = 1.2  # in meters
GPS_JUMP_INTERVAL = 5.0  # in seconds
ODOM_DRIFT_RATE = 0.01  # in meters per meter traveled
HOLE_STEP_BUDGET = 2000
MAX_DIP_ATTEMPTS = 5
VISITED_GATE = 1.0  # in meters


# CLI exit codes
EXIT_DETECTED = 0
EXIT_ERROR = 1
EXIT_MISS = 2
