import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
from PIL import ImageEnhance
out = ImageEnhance.Sharpness(img).enhance(0.5)
