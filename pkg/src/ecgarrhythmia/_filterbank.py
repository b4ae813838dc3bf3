"""Filter-bank coefficients for the supported mother wavelets.

Values transcribed from PyWavelets 1.8.0 (``pywt.Wavelet(name).filter_bank``),
printed with 17 significant digits. Order per entry: decomposition low-pass,
decomposition high-pass, reconstruction low-pass, reconstruction high-pass.
"""

FILTER_BANKS = {
    "haar": (
        (
            0.70710678118654757,
            0.70710678118654757,
        ),
        (
            -0.70710678118654757,
            0.70710678118654757,
        ),
        (
            0.70710678118654757,
            0.70710678118654757,
        ),
        (
            0.70710678118654757,
            -0.70710678118654757,
        ),
    ),
    "db6": (
        (
            -0.0010773010853084796,
            0.0047772575109455108,
            0.00055384220116149613,
            -0.03158203931748603,
            0.027522865530305727,
            0.097501605587323043,
            -0.12976686756726194,
            -0.22626469396543983,
            0.31525035170919763,
            0.75113390802109536,
            0.49462389039845306,
            0.11154074335010947,
        ),
        (
            -0.11154074335010947,
            0.49462389039845306,
            -0.75113390802109536,
            0.31525035170919763,
            0.22626469396543983,
            -0.12976686756726194,
            -0.097501605587323043,
            0.027522865530305727,
            0.03158203931748603,
            0.00055384220116149613,
            -0.0047772575109455108,
            -0.0010773010853084796,
        ),
        (
            0.11154074335010947,
            0.49462389039845306,
            0.75113390802109536,
            0.31525035170919763,
            -0.22626469396543983,
            -0.12976686756726194,
            0.097501605587323043,
            0.027522865530305727,
            -0.03158203931748603,
            0.00055384220116149613,
            0.0047772575109455108,
            -0.0010773010853084796,
        ),
        (
            -0.0010773010853084796,
            -0.0047772575109455108,
            0.00055384220116149613,
            0.03158203931748603,
            0.027522865530305727,
            -0.097501605587323043,
            -0.12976686756726194,
            0.22626469396543983,
            0.31525035170919763,
            -0.75113390802109536,
            0.49462389039845306,
            -0.11154074335010947,
        ),
    ),
    "coif2": (
        (
            -0.00072054944552034698,
            -0.0018232088709110323,
            0.0056114348193688343,
            0.02368017194684777,
            -0.059434418646431092,
            -0.076488599078280761,
            0.41700518442323908,
            0.81272363544941351,
            0.38611006682276289,
            -0.067372554723725595,
            -0.041464936786871777,
            0.016387336463203641,
        ),
        (
            -0.016387336463203641,
            -0.041464936786871777,
            0.067372554723725595,
            0.38611006682276289,
            -0.81272363544941351,
            0.41700518442323908,
            0.076488599078280761,
            -0.059434418646431092,
            -0.02368017194684777,
            0.0056114348193688343,
            0.0018232088709110323,
            -0.00072054944552034698,
        ),
        (
            0.016387336463203641,
            -0.041464936786871777,
            -0.067372554723725595,
            0.38611006682276289,
            0.81272363544941351,
            0.41700518442323908,
            -0.076488599078280761,
            -0.059434418646431092,
            0.02368017194684777,
            0.0056114348193688343,
            -0.0018232088709110323,
            -0.00072054944552034698,
        ),
        (
            -0.00072054944552034698,
            0.0018232088709110323,
            0.0056114348193688343,
            -0.02368017194684777,
            -0.059434418646431092,
            0.076488599078280761,
            0.41700518442323908,
            -0.81272363544941351,
            0.38611006682276289,
            0.067372554723725595,
            -0.041464936786871777,
            -0.016387336463203641,
        ),
    ),
    "bior4.4": (
        (
            0,
            0.03782845550726404,
            -0.023849465019556843,
            -0.11062440441843718,
            0.37740285561283066,
            0.85269867900889385,
            0.37740285561283066,
            -0.11062440441843718,
            -0.023849465019556843,
            0.03782845550726404,
        ),
        (
            -0,
            -0.064538882628697058,
            0.040689417609164058,
            0.41809227322161724,
            -0.7884856164055829,
            0.41809227322161724,
            0.040689417609164058,
            -0.064538882628697058,
            -0,
            0,
        ),
        (
            0,
            -0.064538882628697058,
            -0.040689417609164058,
            0.41809227322161724,
            0.7884856164055829,
            0.41809227322161724,
            -0.040689417609164058,
            -0.064538882628697058,
            0,
            0,
        ),
        (
            0,
            -0.03782845550726404,
            -0.023849465019556843,
            0.11062440441843718,
            0.37740285561283066,
            -0.85269867900889385,
            0.37740285561283066,
            0.11062440441843718,
            -0.023849465019556843,
            -0.03782845550726404,
        ),
    ),
    "sym7": (
        (
            0.0026818145682578781,
            -0.0010473848886829163,
            -0.01263630340325193,
            0.03051551316596357,
            0.067892693501372697,
            -0.049552834937127255,
            0.017441255086855827,
            0.5361019170917628,
            0.76776431700316405,
            0.28862963175151463,
            -0.14004724044296152,
            -0.10780823770381774,
            0.0040102448715336634,
            0.010268176708511255,
        ),
        (
            -0.010268176708511255,
            0.0040102448715336634,
            0.10780823770381774,
            -0.14004724044296152,
            -0.28862963175151463,
            0.76776431700316405,
            -0.5361019170917628,
            0.017441255086855827,
            0.049552834937127255,
            0.067892693501372697,
            -0.03051551316596357,
            -0.01263630340325193,
            0.0010473848886829163,
            0.0026818145682578781,
        ),
        (
            0.010268176708511255,
            0.0040102448715336634,
            -0.10780823770381774,
            -0.14004724044296152,
            0.28862963175151463,
            0.76776431700316405,
            0.5361019170917628,
            0.017441255086855827,
            -0.049552834937127255,
            0.067892693501372697,
            0.03051551316596357,
            -0.01263630340325193,
            -0.0010473848886829163,
            0.0026818145682578781,
        ),
        (
            0.0026818145682578781,
            0.0010473848886829163,
            -0.01263630340325193,
            -0.03051551316596357,
            0.067892693501372697,
            0.049552834937127255,
            0.017441255086855827,
            -0.5361019170917628,
            0.76776431700316405,
            -0.28862963175151463,
            -0.14004724044296152,
            0.10780823770381774,
            0.0040102448715336634,
            -0.010268176708511255,
        ),
    ),
}
