import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
from PIL import ImageEnhance
i = 0
while i < 2:
    img = ImageEnhance.Brightness(img).enhance(1.2)
    i += 1
